use rand::Rng;

use crate::drl::{max_min, ReplayBuffer};
use crate::error::Result;
use crate::estimation::{masked_update, predict_covariance};
use crate::game::closed::{belief_step, BeliefMatrix};
use crate::game::{side_decode, JointAction};
use crate::neural::{gradient_check, QNetwork, TrainBatch};
use crate::numerics::Matrix;
use crate::presets;
use crate::rng::substream;

#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name,
        passed,
        detail,
    }
}

/// Fast invariant checks on the benchmark, seeded by `seed`.
pub fn invariant_suite(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = substream(seed, 100);
    let model = presets::benchmark_model();
    let steady = presets::benchmark_steady_state();
    let mut out = Vec::new();

    let fixed = masked_update(&steady, &[true, true], &model)?;
    let gap = fixed.matrix().max_abs_diff(steady.matrix());
    out.push(check(
        "steady state is a fixed point",
        gap <= 1e-9,
        format!("gap {gap:.2e}"),
    ));

    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let n = model.devices();
        let gamma = side_decode(rng.gen_range(0..1usize << n), n)?;
        let h = predict_covariance(&steady, &model);
        let f = masked_update(&steady, &gamma, &model)?;
        let min_eig = (h.matrix() - f.matrix()).symmetric_eigenvalues()[0];
        worst = worst.min(min_eig);
    }
    out.push(check(
        "h(P) - F(P, γ) is PSD",
        worst >= -1e-9,
        format!("min eigenvalue {worst:.2e}"),
    ));

    let mut worst = 0.0f64;
    for _ in 0..200 {
        let rows: Vec<Vec<f64>> = (0..2)
            .map(|_| {
                let u: f64 = rng.gen();
                vec![u, 1.0 - u]
            })
            .collect();
        let b = BeliefMatrix::new(Matrix::new(2, 2, rows.concat())?)?;
        let t: Vec<f64> = (0..2).map(|_| rng.gen()).collect();
        let next = belief_step(&b, &t)?;
        for i in 0..2 {
            worst = worst.max((next.matrix().row(i).iter().sum::<f64>() - 1.0).abs());
        }
    }
    out.push(check(
        "belief rows stay stochastic",
        worst <= 1e-9,
        format!("max deviation {worst:.2e}"),
    ));

    let mut agree = true;
    for _ in 0..100 {
        let q: Vec<f64> = (0..16).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let brute = (0..4)
            .map(|b| (0..4).map(|a| q[a * 4 + b]).fold(f64::INFINITY, f64::min))
            .fold(f64::NEG_INFINITY, f64::max);
        agree &= max_min(&q)?.0 == brute;
    }
    out.push(check(
        "max-min matches enumeration",
        agree,
        "100 random tables".into(),
    ));

    let net = QNetwork::new(&[3, 8, 4], &mut rng)?;
    let batch = TrainBatch::new(
        (0..6)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect(),
        (0..6).map(|_| rng.gen_range(0..4)).collect(),
        (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )?;
    let err = gradient_check(&net, &batch)?;
    out.push(check(
        "backprop matches finite differences",
        err < 1e-4,
        format!("relative error {err:.2e}"),
    ));

    let mut buf = ReplayBuffer::new(16);
    let mut bounded = true;
    for i in 0..40 {
        buf.push(i);
        bounded &= buf.len() <= 16;
    }
    out.push(check(
        "replay buffer respects capacity",
        bounded,
        format!("len {}", buf.len()),
    ));

    let idle = JointAction::idle(2);
    out.push(check(
        "joint action encoding round-trips",
        JointAction::decode(idle.index(), 2)? == idle,
        String::new(),
    ));
    Ok(out)
}
