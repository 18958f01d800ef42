// Exact minimax value iteration on the truncated covariance graph.

use rse_game::game::{bit_string, side_actions, side_decode};
use rse_game::presets::benchmark_open_game;
use rse_game::Result;

pub fn run_example() -> Result<()> {
    let game = benchmark_open_game();
    let sol = game.oracle(4, 1e-8)?;
    println!("{} states, {} sweeps", sol.states.len(), sol.sweeps());
    println!(
        "equilibrium at P̄: {:?}, value {:.6}",
        sol.equilibrium,
        sol.root_value()
    );

    let k = side_actions(2);
    let q = sol.root_q();
    print!("Q(P̄)    ");
    for b in 0..k {
        print!("  β={}   ", bit_string(&side_decode(b, 2)?));
    }
    println!();
    for a in 0..k {
        print!("α={}  ", bit_string(&side_decode(a, 2)?));
        for b in 0..k {
            print!("{:>9.4}", q[a * k + b]);
        }
        println!();
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
