// Five slots with every packet jammed, then clean channels: the estimation
// error blows up and snaps back to steady state.

use rse_game::harness::verify_trace;
use rse_game::presets::{benchmark_model, benchmark_steady_state};
use rse_game::Result;

pub fn run_example() -> Result<()> {
    let points = verify_trace(&benchmark_model(), &benchmark_steady_state(), 5, 15)?;
    let base = points[0].trace;
    for p in &points {
        let bar = "#".repeat(((p.trace / base).ln().max(0.0) * 6.0) as usize + 1);
        println!("k={:<2} trace={:>12.6} {bar}", p.k, p.trace);
    }
    let recovered = points[6..]
        .iter()
        .find(|p| (p.trace - base).abs() <= 1e-3)
        .map(|p| p.k - 5);
    println!("recovered within 1e-3 after {recovered:?} lossless steps");
    assert!(recovered.is_some_and(|k| k <= 15));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
