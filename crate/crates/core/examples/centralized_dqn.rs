// One network over joint actions, trained with minimax targets.

use rse_game::drl::{head_tail_means, run_centralized, LearnerConfig};
use rse_game::presets::benchmark_open_game;
use rse_game::Result;

/// Short run; pass a step count on the command line for the full one.
pub fn run_example() -> Result<()> {
    train(3000)
}

fn train(steps: usize) -> Result<()> {
    let game = benchmark_open_game();
    let mut cfg = LearnerConfig::centralized().with_seed(0);
    cfg.step_cap = steps;
    let run = run_centralized(&game, &game.probes()?, &cfg)?;

    let losses = run.log.device_losses();
    if let Some((head, tail)) = head_tail_means(&losses, 100) {
        println!("loss: first 100 {head:.4}, last 100 {tail:.4}");
    }
    for (probe, pair) in &run.policy.entries {
        println!("{probe:<10} {pair:?}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    match std::env::args().nth(1) {
        Some(n) => train(n.parse().expect("step count")),
        None => run_example(),
    }
}
