// Separate device and attacker networks on the covariance game.

use rse_game::drl::{run_distributed, LearnerConfig};
use rse_game::presets::benchmark_open_game;
use rse_game::Result;

pub fn run_example() -> Result<()> {
    let game = benchmark_open_game();
    let probes = game.probes()?;
    for seed in 0..2 {
        let mut cfg = LearnerConfig::distributed().with_seed(seed);
        cfg.step_cap = 3000;
        let run = run_distributed(&game, &probes, &cfg)?;
        println!(
            "seed {seed}: {} visited states, {} policy rewrites",
            run.device_policy.entries.len(),
            run.device_policy.updates + run.attacker_policy.updates
        );
        for (probe, pair) in &run.policy.entries {
            println!("  {probe:<10} {pair:?}");
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
