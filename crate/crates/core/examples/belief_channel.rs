// Channel-holding beliefs under power control and jamming.

use rse_game::game::closed::{belief_step, packet_success, sinr};
use rse_game::game::JointAction;
use rse_game::presets::{benchmark_initial_belief, benchmark_per, benchmark_powers};
use rse_game::Result;

pub fn run_example() -> Result<()> {
    let powers = benchmark_powers();
    let per = benchmark_per();
    println!("SINR secure/jammed: {:.3}", sinr(0.7, 0.5, 0.1));

    for (alpha, beta) in [([0, 0], [0, 0]), ([1, 0], [0, 1]), ([1, 1], [1, 1])] {
        let a = JointAction::from_bits(&alpha, &beta);
        let t = packet_success(&a, &powers, &per);
        let b = belief_step(&benchmark_initial_belief(), &t)?;
        println!(
            "{a:?}  t={t:.3?}  next belief {:.4?} / {:.4?}",
            b.matrix().row(0),
            b.matrix().row(1)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
