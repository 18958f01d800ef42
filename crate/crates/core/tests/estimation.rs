use proptest::prelude::*;
use rand::Rng;
use rse_game::estimation::{
    innovation, kalman_step, masked_update, predict_covariance, simulate_process,
    simulate_process_from, steady_state_covariance, ErrorCovariance, EstimatorState, SystemModel,
    STEADY_STATE_MAX_ITER, STEADY_STATE_TOLERANCE,
};
use rse_game::numerics::Matrix;
use rse_game::presets::{benchmark_model, benchmark_steady_state};
use rse_game::rng::seeded;

fn random_psd<R: Rng>(rng: &mut R, m: usize, shift: f64) -> Matrix {
    let l = Matrix::new(m, m, (0..m * m).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let mut x = &l * &l.transpose();
    for i in 0..m {
        x[(i, i)] += shift;
    }
    x
}

/// Random observable models with 1 to 3 states and 1 to 3 devices.
fn random_models(count: usize, seed: u64) -> Vec<SystemModel> {
    let mut rng = seeded(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let m = rng.gen_range(1..=3);
        let n = rng.gen_range(1..=3);
        let a = Matrix::new(m, m, (0..m * m).map(|_| rng.gen_range(-1.2..1.2)).collect()).unwrap();
        let c = Matrix::new(n, m, (0..n * m).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let q = random_psd(&mut rng, m, 0.1);
        let r = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        if let Ok(model) = SystemModel::new(a, c, q, r, Matrix::identity(m)) {
            out.push(model);
        }
    }
    out
}

#[test]
fn steady_state_is_a_fixed_point_on_random_models() {
    for model in random_models(20, 11) {
        let p =
            steady_state_covariance(&model, STEADY_STATE_TOLERANCE, STEADY_STATE_MAX_ITER).unwrap();
        let all = vec![true; model.devices()];
        let gap = masked_update(&p, &all, &model)
            .unwrap()
            .matrix()
            .max_abs_diff(p.matrix());
        assert!(gap <= 1e-9, "gap {gap:e} on {model:?}");
        assert!(p.is_valid());
    }
}

#[test]
fn one_step_loss_goldens() {
    let model = benchmark_model();
    let p = benchmark_steady_state();
    let cases = [
        (
            [true, false],
            [[0.56341001, 0.16747371], [0.16747371, 0.73306654]],
        ),
        (
            [false, true],
            [[2.17799018, 0.08265292], [0.08265292, 0.09036986]],
        ),
        (
            [false, false],
            [[2.88737847, 0.85827369], [0.85827369, 0.93840694]],
        ),
    ];
    for (gamma, golden) in cases {
        let f = masked_update(&p, &gamma, &model).unwrap();
        let golden = Matrix::from_rows(&golden).unwrap();
        assert!(f.matrix().max_abs_diff(&golden) <= 1e-7, "{gamma:?}: {f:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn measurements_never_increase_covariance(seed in any::<u64>(), mask in any::<u8>()) {
        let model = &random_models(1, seed)[0];
        let mut rng = seeded(seed ^ 0x5eed);
        let x = ErrorCovariance::new(random_psd(&mut rng, model.state_dim(), 0.0)).unwrap();
        let gamma: Vec<bool> = (0..model.devices()).map(|i| mask >> i & 1 == 1).collect();
        let h = predict_covariance(&x, model);
        let f = masked_update(&x, &gamma, model).unwrap();
        let min_eig = (h.matrix() - f.matrix()).symmetric_eigenvalues()[0];
        prop_assert!(min_eig >= -1e-9 * h.matrix().max_abs().max(1.0), "min eigenvalue {min_eig:e}");
        prop_assert!(f.is_valid());
    }

    #[test]
    fn no_arrivals_is_pure_prediction(seed in any::<u64>()) {
        let model = &random_models(1, seed)[0];
        let mut rng = seeded(seed ^ 0xfeed);
        let x = ErrorCovariance::new(random_psd(&mut rng, model.state_dim(), 0.0)).unwrap();
        let none = vec![false; model.devices()];
        let f = masked_update(&x, &none, model).unwrap();
        prop_assert_eq!(f, predict_covariance(&x, model));
    }
}

#[test]
fn noiseless_start_stays_at_zero() {
    let base = benchmark_model();
    let model = SystemModel::new(
        base.a().clone(),
        base.c().clone(),
        Matrix::zeros(2, 2),
        base.r_diag().to_vec(),
        Matrix::zeros(2, 2),
    )
    .unwrap();
    let traj = simulate_process(&model, 50, 3).unwrap();
    assert!(traj.states.iter().flatten().all(|&x| x == 0.0));
    // measurements carry only measurement noise
    assert!(traj.measurements.iter().flatten().any(|&y| y != 0.0));
}

#[test]
fn deterministic_linear_recursion() {
    let model = SystemModel::new(
        Matrix::diag(&[2.0, 0.8]),
        Matrix::identity(2),
        Matrix::zeros(2, 2),
        vec![1.0, 1.0],
        Matrix::zeros(2, 2),
    )
    .unwrap();
    let traj = simulate_process_from(&model, vec![1.0, 0.0], 12, 0).unwrap();
    for (k, x) in traj.states.iter().enumerate() {
        assert_eq!(x, &vec![2f64.powi(k as i32), 0.0]);
    }
    let traj = simulate_process_from(&model, vec![0.0, 1.0], 12, 0).unwrap();
    let mut expected = 1.0;
    for x in &traj.states {
        assert!((x[1] - expected).abs() <= 1e-15);
        expected *= 0.8;
    }
}

#[test]
fn simulation_is_seeded() {
    let model = benchmark_model();
    assert_eq!(
        simulate_process(&model, 30, 5).unwrap(),
        simulate_process(&model, 30, 5).unwrap()
    );
    assert_ne!(
        simulate_process(&model, 30, 5).unwrap(),
        simulate_process(&model, 30, 6).unwrap()
    );
}

// A is unstable, so Monte-Carlo checks pool many short runs.
const RUNS: u64 = 5000;
const HORIZON: usize = 20;

#[test]
fn process_noise_has_covariance_q() {
    let model = benchmark_model();
    let mut sum = [[0.0; 2]; 2];
    let mut count = 0.0;
    for seed in 0..RUNS {
        let traj = simulate_process(&model, HORIZON, seed).unwrap();
        for k in 0..HORIZON - 1 {
            let ax = model.a().mul_vec(&traj.states[k]);
            let w: Vec<f64> = traj.states[k + 1]
                .iter()
                .zip(&ax)
                .map(|(x, a)| x - a)
                .collect();
            for (i, row) in sum.iter_mut().enumerate() {
                for (j, s) in row.iter_mut().enumerate() {
                    *s += w[i] * w[j];
                }
            }
            count += 1.0;
        }
    }
    for (i, row) in sum.iter().enumerate() {
        for (j, total) in row.iter().enumerate() {
            let est = total / count;
            let q = model.q()[(i, j)];
            assert!(
                (est - q).abs() <= 0.05 * 0.6,
                "cov[{i}][{j}] = {est}, expected {q}"
            );
        }
    }
}

/// Lossless filtering from stationarity: errors have covariance `P̄`,
/// innovations `Cᵢ h(P̄) Cᵢᵀ + Rᵢ`.
#[test]
fn lossless_filter_is_consistent() {
    let base = benchmark_model();
    let steady = benchmark_steady_state();
    let model = base.with_pi0(steady.matrix().clone()).unwrap();
    let mut err_sq = [0.0; 2];
    let mut innov_sq = [0.0; 2];
    let mut count = 0.0;
    for seed in 0..RUNS {
        let traj = simulate_process(&model, HORIZON, 10_000 + seed).unwrap();
        let mut state = EstimatorState::new(vec![0.0, 0.0], steady.clone());
        for k in 1..HORIZON {
            let z = innovation(&traj.measurements[k], &state.prediction(&model), &model).unwrap();
            state = kalman_step(&state, &z, &[true, true], &model).unwrap();
            for i in 0..2 {
                let e = traj.states[k][i] - state.x_hat[i];
                err_sq[i] += e * e;
                innov_sq[i] += z[i] * z[i];
            }
            count += 1.0;
        }
    }
    let h = predict_covariance(&steady, &model);
    for i in 0..2 {
        let mse = err_sq[i] / count;
        let p = steady.matrix()[(i, i)];
        assert!(
            (mse / p - 1.0).abs() <= 0.10,
            "coordinate {i}: mse {mse}, P̄ {p}"
        );

        let ci = model.c().row(i);
        let hc = h.matrix().mul_vec(ci);
        let expected = ci.iter().zip(&hc).map(|(a, b)| a * b).sum::<f64>() + model.r_diag()[i];
        let var = innov_sq[i] / count;
        assert!(
            (var / expected - 1.0).abs() <= 0.05,
            "device {i}: {var} vs {expected}"
        );
    }
}
