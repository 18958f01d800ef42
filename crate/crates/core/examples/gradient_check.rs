// Backprop against central differences on a small Q-network.

use rse_game::neural::{gradient_check, QNetwork, TrainBatch};
use rse_game::rng::seeded;
use rse_game::Result;

pub fn run_example() -> Result<()> {
    let mut rng = seeded(5);
    let net = QNetwork::new(&[3, 16, 16], &mut rng)?;
    let batch = TrainBatch::new(
        vec![vec![0.2, -1.0, 0.5], vec![1.5, 0.1, -0.3]],
        vec![3, 11],
        vec![2.0, -1.0],
    )?;
    let err = gradient_check(&net, &batch)?;
    println!(
        "{} parameters, max relative error {err:.2e}",
        net.param_count()
    );
    assert!(err < 1e-4);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
