// Drive a scenario from a TOML string, as the CLI does from a file.

use rse_game::harness::{parse_config, run_scenario};
use rse_game::Result;

pub fn run_example() -> Result<()> {
    let out = std::env::temp_dir().join(format!("rse-game-example-{}", std::process::id()));
    let text = format!(
        r#"
scenario = "oracle"
output = "{}"

[costs]
c = [7.0, 5.0]
c_beta = [1.0, 1.0]

[oracle]
depth = 3
"#,
        out.display()
    );
    let report = run_scenario(&parse_config(&text)?)?;
    let oracle = report.oracle.expect("oracle scenario");
    println!("cheap jamming: equilibrium {}", oracle.equilibrium);
    for path in &report.artifacts {
        println!("wrote {}", path.display());
    }
    std::fs::remove_dir_all(&out)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
