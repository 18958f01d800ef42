// Remote estimation over lossy channels: simulate the plant, drop packets at
// random and compare the empirical error with the covariance recursion.

use rand::Rng;
use rse_game::estimation::{innovation, kalman_step, simulate_process, EstimatorState};
use rse_game::presets::{benchmark_model, benchmark_steady_state};
use rse_game::rng::seeded;
use rse_game::Result;

pub fn run_example() -> Result<()> {
    let steady = benchmark_steady_state();
    let model = benchmark_model().with_pi0(steady.matrix().clone())?;
    let mut drops = seeded(99);
    let steps = 30;
    let traj = simulate_process(&model, steps, 42)?;
    let mut est = EstimatorState::new(vec![0.0; 2], steady);
    for k in 1..steps {
        let gamma: Vec<bool> = (0..2).map(|_| drops.gen_bool(0.8)).collect();
        let z = innovation(&traj.measurements[k], &est.prediction(&model), &model)?;
        est = kalman_step(&est, &z, &gamma, &model)?;
        let err: f64 = traj.states[k]
            .iter()
            .zip(&est.x_hat)
            .map(|(x, h)| (x - h).powi(2))
            .sum();
        println!(
            "k={k:<2} γ={:?}  |e|²={err:>10.4}  trace(P)={:>8.4}",
            gamma.iter().map(|&g| g as u8).collect::<Vec<_>>(),
            est.p.trace()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
