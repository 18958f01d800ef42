//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::Rng;
use rse_game::drl::{epsilon_greedy, head_tail_means, minimax_target, ReplayBuffer};
use rse_game::estimation::{
    masked_update, steady_state_covariance, ErrorCovariance, SystemModel, STEADY_STATE_MAX_ITER,
    STEADY_STATE_TOLERANCE,
};
use rse_game::game::closed::{belief_step, BeliefMatrix, ROW_SUM_TOLERANCE};
use rse_game::game::{joint_actions, side_actions, JointAction};
use rse_game::harness::{
    run_scenario, verify_trace, RunReport, Scenario, ScenarioConfig, SeedReport,
};
use rse_game::neural::{gradient_check, QNetwork, TrainBatch};
use rse_game::numerics::{masked_pseudo_inverse, Matrix};
use rse_game::presets::*;
use rse_game::rng::seeded;

const SEEDS: u64 = 5;
const SEED_BUDGET: Duration = Duration::from_secs(300);

type Suite = (&'static str, fn() -> Result<(), String>);
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn idle() -> String {
    format!("{:?}", JointAction::idle(2))
}

// 1
fn steady_state_matches() -> Outcome {
    let t = Instant::now();
    let p = match steady_state_covariance(
        &benchmark_model(),
        STEADY_STATE_TOLERANCE,
        STEADY_STATE_MAX_ITER,
    ) {
        Ok(p) => p,
        Err(e) => return outcome(false, e.to_string()),
    };
    let expected = Matrix::from_rows(&[[0.530, 0.020], [0.020, 0.088]]).unwrap();
    let gap = p.matrix().max_abs_diff(&expected);
    let elapsed = t.elapsed();
    outcome(
        gap <= 5e-3 && elapsed < Duration::from_secs(1),
        format!("max gap {gap:.2e} to the 3-decimal value, {elapsed:.2?}"),
    )
}

fn random_models(count: usize, seed: u64) -> Vec<SystemModel> {
    let mut rng = seeded(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let m = rng.gen_range(1..=3);
        let n = rng.gen_range(1..=3);
        let a = Matrix::new(m, m, (0..m * m).map(|_| rng.gen_range(-1.2..1.2)).collect()).unwrap();
        let c = Matrix::new(n, m, (0..n * m).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let l = Matrix::new(m, m, (0..m * m).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let mut q = &l * &l.transpose();
        for i in 0..m {
            q[(i, i)] += 0.1;
        }
        let r = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        // constructor rejects unobservable pairs
        if let Ok(model) = SystemModel::new(a, c, q, r, Matrix::identity(m)) {
            out.push(model);
        }
    }
    out
}

// 2
fn steady_state_is_fixed_point() -> Outcome {
    let mut worst = 0.0f64;
    let mut models = vec![benchmark_model()];
    models.extend(random_models(20, 2024));
    for model in &models {
        let gap = steady_state_covariance(model, STEADY_STATE_TOLERANCE, STEADY_STATE_MAX_ITER)
            .and_then(|p| {
                let f = masked_update(&p, &vec![true; model.devices()], model)?;
                Ok(f.matrix().max_abs_diff(p.matrix()))
            })
            .unwrap_or(f64::INFINITY);
        worst = worst.max(gap);
    }
    outcome(
        worst <= 1e-9,
        format!("worst gap {worst:.2e} over {} models", models.len()),
    )
}

// 3
fn loss_and_recovery() -> Outcome {
    let t = Instant::now();
    let points = match verify_trace(&benchmark_model(), &benchmark_steady_state(), 5, 15) {
        Ok(p) => p,
        Err(e) => return outcome(false, e.to_string()),
    };
    let trace: Vec<f64> = points.iter().map(|p| p.trace).collect();
    let rising = trace[..=5].windows(2).all(|w| w[1] > w[0]);
    let back = (6..trace.len())
        .find(|&k| (trace[k] - trace[0]).abs() <= 1e-3)
        .map(|k| k - 5);
    let elapsed = t.elapsed();
    outcome(
        rising && back.is_some_and(|k| k <= 15) && (trace[0] - 0.618).abs() < 5e-4 && elapsed < Duration::from_secs(1),
        format!(
            "start {:.6}, peak {:.3}, strictly rising {rising}, back within 1e-3 after {back:?} steps, {elapsed:.2?}",
            trace[0], trace[5]
        ),
    )
}

// 4
fn oracle_equilibrium() -> Outcome {
    let t = Instant::now();
    let sol = match benchmark_open_game().oracle(4, 1e-8) {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let elapsed = t.elapsed();
    outcome(
        sol.equilibrium == JointAction::idle(2) && elapsed < Duration::from_secs(10),
        format!(
            "equilibrium {:?}, value {:.6}, {} states, {elapsed:.2?}",
            sol.equilibrium,
            sol.root_value(),
            sol.states.len()
        ),
    )
}

/// Runs every seed on its own so each gets a wall-clock time.
fn run_seeds(scenario: Scenario, out: &Path) -> Result<(Vec<SeedReport>, Vec<Duration>), String> {
    let mut seeds = Vec::new();
    let mut times = Vec::new();
    for seed in 0..SEEDS {
        let mut cfg = ScenarioConfig::for_scenario(scenario);
        cfg.seeds = vec![seed];
        cfg.output = out.to_path_buf();
        let t = Instant::now();
        let report: RunReport = run_scenario(&cfg).map_err(|e| format!("seed {seed}: {e}"))?;
        times.push(t.elapsed());
        seeds.extend(report.seeds);
    }
    Ok((seeds, times))
}

fn agreeing(seeds: &[SeedReport], probes: &[&str]) -> usize {
    seeds
        .iter()
        .filter(|s| {
            probes
                .iter()
                .all(|p| s.equilibrium.get(*p) == Some(&idle()))
        })
        .count()
}

fn slowest(times: &[Duration]) -> Duration {
    times.iter().copied().max().unwrap_or_default()
}

/// Last logged `Q(P̄, α, β=00)` for each α, in α order.
fn beta_idle_column(seed: &SeedReport) -> Option<Vec<f64>> {
    let q = seed.log.rows.iter().rev().find_map(|r| r.q.as_ref())?;
    ["00", "01", "10", "11"]
        .iter()
        .map(|a| {
            let name = format!("q_pbar_a{a}_b00");
            seed.log
                .q_columns
                .iter()
                .position(|c| *c == name)
                .map(|i| q[i])
        })
        .collect()
}

// 5
fn centralized_learner(out: &Path) -> Outcome {
    let (seeds, times) = match run_seeds(Scenario::OpenCentralized, out) {
        Ok(r) => r,
        Err(e) => return outcome(false, e),
    };
    let ok = agreeing(&seeds, &["pbar", "pbar_g10"]);
    let mut ordered = 0;
    let mut columns = Vec::new();
    for s in &seeds {
        if let Some(col) = beta_idle_column(s) {
            if (1..4).all(|a| col[0] < col[a]) {
                ordered += 1;
            }
            columns.push(format!(
                "[{}]",
                col.iter()
                    .map(|v| format!("{v:.3}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
        }
    }
    let slow = slowest(&times);
    outcome(
        ok >= 4 && ordered == seeds.len() && slow < SEED_BUDGET,
        format!(
            "{ok}/{SEEDS} seeds at idle on pbar and pbar_g10; α=00 lowest under β=00 in {ordered}/{} ({}); slowest seed {slow:.1?}",
            seeds.len(),
            columns.join(" ")
        ),
    )
}

// 6
fn distributed_open_learner(out: &Path) -> Outcome {
    let (seeds, times) = match run_seeds(Scenario::OpenDistributed, out) {
        Ok(r) => r,
        Err(e) => return outcome(false, e),
    };
    let ok = agreeing(&seeds, &["pbar", "pbar_g10"]);
    let mut drops = Vec::new();
    let mut all_drop = true;
    for s in &seeds {
        let ratio = |series: Vec<f64>| head_tail_means(&series, 100).map_or(0.0, |(h, t)| h / t);
        let (d, a) = (ratio(s.log.device_losses()), ratio(s.log.attacker_losses()));
        all_drop &= d >= 10.0 && a >= 10.0;
        drops.push(format!("{d:.2}/{a:.2}"));
    }
    let slow = slowest(&times);
    outcome(
        ok >= 4 && all_drop && slow < SEED_BUDGET,
        format!(
            "{ok}/{SEEDS} seeds at idle on pbar and pbar_g10; loss drop device/attacker per seed {} (need >= 10); slowest seed {slow:.1?}",
            drops.join(" ")
        ),
    )
}

// 7
fn distributed_closed_learner(out: &Path) -> Outcome {
    let (seeds, times) = match run_seeds(Scenario::ClosedDistributed, out) {
        Ok(r) => r,
        Err(e) => return outcome(false, e),
    };
    let ok = agreeing(&seeds, &["b_uniform", "b_skewed"]);
    let slow = slowest(&times);
    outcome(
        ok >= 4 && slow < SEED_BUDGET,
        format!("{ok}/{SEEDS} seeds at idle on both beliefs; slowest seed {slow:.1?}"),
    )
}

fn random_spd<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    let l = Matrix::new(n, n, (0..n * n).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
    let mut g = &l * &l.transpose();
    for i in 0..n {
        g[(i, i)] += rng.gen_range(0.1..2.0);
    }
    g
}

fn pinv_vs_svd() -> Result<(), String> {
    let mut rng = seeded(81);
    for case in 0..100 {
        let n = rng.gen_range(1..=5);
        let g = random_spd(&mut rng, n);
        let mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let mut masked = DMatrix::from_row_slice(n, n, g.as_slice());
        for i in (0..n).filter(|&i| !mask[i]) {
            masked.row_mut(i).fill(0.0);
            masked.column_mut(i).fill(0.0);
        }
        let oracle = masked.pseudo_inverse(1e-12).map_err(|e| e.to_string())?;
        let ours = masked_pseudo_inverse(&g, &mask).map_err(|e| e.to_string())?;
        let scale = oracle.amax().max(1.0);
        for i in 0..n {
            for j in 0..n {
                if (ours[(i, j)] - oracle[(i, j)]).abs() > 1e-8 * scale {
                    return Err(format!("pinv case {case}"));
                }
            }
        }
    }
    Ok(())
}

fn covariance_stays_psd() -> Result<(), String> {
    let mut rng = seeded(82);
    let models = random_models(100, 83);
    for (case, model) in models.iter().enumerate() {
        let m = model.state_dim();
        let l = Matrix::new(m, m, (0..m * m).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let x = ErrorCovariance::new(&l * &l.transpose()).map_err(|e| e.to_string())?;
        let gamma: Vec<bool> = (0..model.devices()).map(|_| rng.gen_bool(0.5)).collect();
        let f = masked_update(&x, &gamma, model).map_err(|e| e.to_string())?;
        if !f.is_valid() {
            return Err(format!("F not PSD in case {case}"));
        }
    }
    Ok(())
}

fn beliefs_stay_stochastic() -> Result<(), String> {
    let mut rng = seeded(84);
    for case in 0..1000 {
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=4);
        let mut data = Vec::new();
        for _ in 0..n {
            let raw: Vec<f64> = (0..=m).map(|_| rng.gen_range(0.0..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            data.extend(raw.iter().map(|v| v / sum));
        }
        let b =
            BeliefMatrix::new(Matrix::new(n, m + 1, data).unwrap()).map_err(|e| e.to_string())?;
        let t: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let next = belief_step(&b, &t).map_err(|e| e.to_string())?;
        for i in 0..n {
            let row = next.matrix().row(i);
            if row.iter().any(|&v| v < 0.0)
                || (row.iter().sum::<f64>() - 1.0).abs() > ROW_SUM_TOLERANCE
            {
                return Err(format!("belief case {case} row {i}"));
            }
        }
    }
    Ok(())
}

fn minimax_vs_enumeration() -> Result<(), String> {
    let mut rng = seeded(85);
    for case in 0..100 {
        let n = rng.gen_range(1..=3);
        let k = side_actions(n);
        let q: Vec<f64> = (0..joint_actions(n))
            .map(|_| rng.gen_range(-100.0..100.0))
            .collect();
        let (reward, rho) = (rng.gen_range(-50.0..50.0), rng.gen_range(0.0..1.0));
        let mut best = f64::NEG_INFINITY;
        for beta in 0..k {
            best = best.max(
                (0..k)
                    .map(|alpha| q[alpha * k + beta])
                    .fold(f64::INFINITY, f64::min),
            );
        }
        if minimax_target(reward, rho, &q).map_err(|e| e.to_string())? != reward + rho * best {
            return Err(format!("minimax case {case}"));
        }
    }
    Ok(())
}

fn gradients_match() -> Result<(), String> {
    let mut rng = seeded(86);
    for case in 0..20 {
        let mut sizes = vec![rng.gen_range(1..=6)];
        for _ in 0..rng.gen_range(1..=3) {
            sizes.push(rng.gen_range(2..=10));
        }
        let outputs = *sizes.last().unwrap();
        let net = QNetwork::new(&sizes, &mut rng).map_err(|e| e.to_string())?;
        let len = rng.gen_range(1..=8);
        let batch = TrainBatch::new(
            (0..len)
                .map(|_| (0..sizes[0]).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect(),
            (0..len).map(|_| rng.gen_range(0..outputs)).collect(),
            (0..len).map(|_| rng.gen_range(-3.0..3.0)).collect(),
        )
        .map_err(|e| e.to_string())?;
        let err = gradient_check(&net, &batch).map_err(|e| e.to_string())?;
        if err >= 1e-4 {
            return Err(format!("gradient case {case}: {err:e}"));
        }
    }
    Ok(())
}

fn replay_and_greedy() -> Result<(), String> {
    let mut rng = seeded(87);
    for _ in 0..100 {
        let capacity = rng.gen_range(1..64);
        let mut buf = ReplayBuffer::new(capacity);
        for i in 0..rng.gen_range(0..200) {
            buf.push(i);
            if buf.len() > capacity {
                return Err("replay over capacity".into());
            }
        }
        let greedy = rng.gen_range(0..16);
        if (0..50).any(|_| epsilon_greedy(greedy, 16, 0.0, &mut rng) != greedy) {
            return Err("epsilon 0 explored".into());
        }
    }
    Ok(())
}

fn csv_is_reproducible() -> Result<(), String> {
    let mut bytes = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut cfg = ScenarioConfig::for_scenario(Scenario::OpenDistributed);
        cfg.seeds = vec![11];
        cfg.learner.step_cap = 1000;
        cfg.output = dir.path().to_path_buf();
        let report = run_scenario(&cfg).map_err(|e| e.to_string())?;
        bytes.push(std::fs::read(&report.seeds[0].csv).map_err(|e| e.to_string())?);
    }
    if bytes[0] == bytes[1] {
        Ok(())
    } else {
        Err("CSV bytes differ".into())
    }
}

// 8
fn property_suites() -> Outcome {
    let suites: [Suite; 7] = [
        ("pinv-vs-svd", pinv_vs_svd),
        ("psd", covariance_stays_psd),
        ("belief-rows", beliefs_stay_stochastic),
        ("minimax", minimax_vs_enumeration),
        ("gradients", gradients_match),
        ("replay+greedy", replay_and_greedy),
        ("csv-bytes", csv_is_reproducible),
    ];
    let mut failed = Vec::new();
    for (name, check) in suites {
        if let Err(e) = check() {
            failed.push(format!("{name}: {e}"));
        }
    }
    if failed.is_empty() {
        outcome(true, format!("{} suites", suites.len()))
    } else {
        outcome(false, failed.join("; "))
    }
}

fn main() {
    let out = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<Criterion> = vec![
        ("steady-state covariance", Box::new(steady_state_matches)),
        (
            "steady state is a fixed point",
            Box::new(steady_state_is_fixed_point),
        ),
        ("loss burst and recovery", Box::new(loss_and_recovery)),
        ("tabular oracle equilibrium", Box::new(oracle_equilibrium)),
        (
            "centralized learner",
            Box::new(|| centralized_learner(out.path())),
        ),
        (
            "distributed learner, covariance game",
            Box::new(|| distributed_open_learner(out.path())),
        ),
        (
            "distributed learner, belief game",
            Box::new(|| distributed_closed_learner(out.path())),
        ),
        ("property suites", Box::new(property_suites)),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.passed {
            failures += 1;
        }
        println!(
            "criterion {}: {} {name}: {}",
            i + 1,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
