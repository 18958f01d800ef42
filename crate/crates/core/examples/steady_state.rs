// Steady-state error covariance of the benchmark plant and the one-step
// effect of each packet-arrival pattern.

use rse_game::estimation::{
    masked_update, recovery_horizon, steady_state_covariance, STEADY_STATE_MAX_ITER,
    STEADY_STATE_TOLERANCE,
};
use rse_game::game::bit_string;
use rse_game::presets::benchmark_model;
use rse_game::Result;

pub fn run_example() -> Result<()> {
    let model = benchmark_model();
    let p = steady_state_covariance(&model, STEADY_STATE_TOLERANCE, STEADY_STATE_MAX_ITER)?;
    println!("P̄ = {:?}  trace {:.6}", p.matrix(), p.trace());

    for gamma in [[true, true], [true, false], [false, true], [false, false]] {
        let next = masked_update(&p, &gamma, &model)?;
        let back = recovery_horizon(&next, &model, 1e-3)?;
        println!(
            "γ={}  trace {:>9.6}  back within 1e-3 after {back} lossless steps",
            bit_string(&gamma),
            next.trace()
        );
    }
    // the fixed point really is fixed
    let all = masked_update(&p, &[true, true], &model)?;
    assert!(all.matrix().max_abs_diff(p.matrix()) <= 1e-9);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
