// The same two learners on the channel-belief game.

use rse_game::drl::{run_distributed, LearnerConfig};
use rse_game::presets::{belief_probes, benchmark_belief_game};
use rse_game::Result;

pub fn run_example() -> Result<()> {
    let game = benchmark_belief_game();
    let mut cfg = LearnerConfig::distributed().with_seed(1);
    cfg.step_cap = 3000;
    let run = run_distributed(&game, &belief_probes(), &cfg)?;
    for (probe, pair) in &run.policy.entries {
        println!("{probe:<10} {pair:?}");
    }
    println!(
        "mean reward {:.4}",
        run.log.rewards().iter().sum::<f64>() / run.log.steps() as f64
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
