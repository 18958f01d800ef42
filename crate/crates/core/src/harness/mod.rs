//! Scenario orchestration: TOML configs, per-seed runs, CSV logs, SVG plots
//! and a JSON [`RunReport`].

mod checks;
mod config;
mod output;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::drl::{run_centralized, run_distributed, EpisodeLog, LearnerConfig, PolicyTable};
use crate::error::Result;
use crate::estimation::{masked_update, ErrorCovariance, SystemModel};
use crate::game::{bit_string, MarkovGame, Probe};
use crate::presets;

pub use checks::{invariant_suite, CheckResult};
pub use config::{
    load_config, parse_config, ClosedLoopConfig, OracleConfig, Scenario, ScenarioConfig,
    VerifyConfig,
};
pub use output::{emit_plot, write_csv, write_trace_csv, TracePoint, LOG_COLUMNS, TRACE_COLUMNS};

/// Result of one training seed.
#[derive(Debug, Clone, Serialize)]
pub struct SeedReport {
    pub seed: u64,
    /// Extracted pair per probe, as `(α=.., β=..)`.
    pub equilibrium: BTreeMap<String, String>,
    pub converged_at: Option<usize>,
    pub steps: usize,
    /// Mean of the last 100 logged losses.
    pub final_loss_device: Option<f64>,
    pub final_loss_attacker: Option<f64>,
    pub csv: PathBuf,
    pub plot: Option<PathBuf>,
    #[serde(skip)]
    pub policy: PolicyTable,
    #[serde(skip)]
    pub log: EpisodeLog,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub equilibrium: String,
    pub root_value: f64,
    /// `Q(P̄, ·)` by joint-action index.
    pub root_q: Vec<f64>,
    pub states: usize,
    pub sweeps: usize,
    /// Pair at every probe state that the truncated graph contains.
    pub probes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: Scenario,
    /// One entry per seed for learning scenarios.
    pub seeds: Vec<SeedReport>,
    pub oracle: Option<OracleReport>,
    pub trace: Option<Vec<TracePoint>>,
    pub artifacts: Vec<PathBuf>,
}

impl RunReport {
    /// Most common pair at `probe` across seeds and how many seeds agree.
    pub fn consensus(&self, probe: &str) -> Option<(String, usize)> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for s in &self.seeds {
            if let Some(a) = s.equilibrium.get(probe) {
                *counts.entry(a).or_default() += 1;
            }
        }
        counts
            .into_iter()
            .max_by_key(|&(_, c)| c)
            .map(|(a, c)| (a.to_string(), c))
    }
}

/// `trace(P_k)` from `P̄` through `loss_steps` all-loss steps and
/// `recovery_steps` lossless ones.
pub fn verify_trace(
    model: &SystemModel,
    steady: &ErrorCovariance,
    loss_steps: usize,
    recovery_steps: usize,
) -> Result<Vec<TracePoint>> {
    let n = model.devices();
    let mut p = steady.clone();
    let mut out = vec![TracePoint {
        k: 0,
        gamma: Vec::new(),
        trace: p.trace(),
    }];
    for k in 1..=loss_steps + recovery_steps {
        let gamma = vec![k > loss_steps; n];
        p = masked_update(&p, &gamma, model)?;
        out.push(TracePoint {
            k,
            gamma,
            trace: p.trace(),
        });
    }
    Ok(out)
}

fn mean_tail(series: &[f64]) -> Option<f64> {
    crate::drl::head_tail_means(series, 100).map(|(_, t)| t)
}

fn train_seed<G: MarkovGame + Sync>(
    cfg: &ScenarioConfig,
    game: &G,
    probes: &[Probe<G::State>],
    learner: &LearnerConfig,
    dir: &Path,
) -> Result<SeedReport>
where
    G::State: Sync,
{
    let (log, policy) = match cfg.scenario {
        Scenario::OpenCentralized => {
            let run = run_centralized(game, probes, learner)?;
            (run.log, run.policy)
        }
        _ => {
            let run = run_distributed(game, probes, learner)?;
            (run.log, run.policy)
        }
    };
    let csv = dir.join(format!("seed_{}.csv", learner.seed));
    write_csv(&log, cfg.scenario.name(), learner.seed, &csv)?;
    let plot = if cfg.plots {
        let svg = dir.join(format!("seed_{}_loss.svg", learner.seed));
        let ys: &[&str] = if cfg.scenario == Scenario::OpenCentralized {
            &["loss_device"]
        } else {
            &["loss_device", "loss_attacker"]
        };
        emit_plot(&csv, &svg, "step", ys, true)?;
        Some(svg)
    } else {
        None
    };
    Ok(SeedReport {
        seed: learner.seed,
        equilibrium: policy
            .entries
            .iter()
            .map(|(k, v)| (k.clone(), format!("{v:?}")))
            .collect(),
        converged_at: log.converged_at,
        steps: log.steps(),
        final_loss_device: mean_tail(&log.device_losses()),
        final_loss_attacker: mean_tail(&log.attacker_losses()),
        csv,
        plot,
        policy,
        log,
    })
}

fn fan_out<G: MarkovGame + Sync>(
    cfg: &ScenarioConfig,
    game: &G,
    probes: &[Probe<G::State>],
    dir: &Path,
) -> Result<Vec<SeedReport>>
where
    G::State: Sync + Send,
{
    cfg.seeds
        .par_iter()
        .map(|&seed| train_seed(cfg, game, probes, &cfg.learner_for_seed(seed), dir))
        .collect()
}

/// Runs a scenario and writes its artifacts plus `report.json` under
/// `<output>/<scenario>/`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport> {
    cfg.validate()?;
    let dir = cfg.scenario_dir();
    fs::create_dir_all(&dir)?;
    let mut report = RunReport {
        scenario: cfg.scenario,
        seeds: Vec::new(),
        oracle: None,
        trace: None,
        artifacts: Vec::new(),
    };
    match cfg.scenario {
        Scenario::VerifyModel => {
            let game = cfg.open_game()?;
            let points = verify_trace(
                &cfg.model,
                game.steady_state(),
                cfg.verify.loss_steps,
                cfg.verify.recovery_steps,
            )?;
            let csv = dir.join("trace.csv");
            write_trace_csv(&points, &csv)?;
            report.artifacts.push(csv.clone());
            if cfg.plots {
                let svg = dir.join("trace.svg");
                emit_plot(&csv, &svg, "k", &["trace"], false)?;
                report.artifacts.push(svg);
            }
            report.trace = Some(points);
        }
        Scenario::Oracle => {
            let game = cfg.open_game()?;
            let sol = game.oracle(cfg.oracle.depth, cfg.oracle.tol)?;
            let mut probes = BTreeMap::new();
            for probe in game.probes()? {
                if let Some(i) = sol.states.iter().position(|s| {
                    game.distance(s, &probe.state) <= crate::game::oracle::STATE_PROXIMITY
                }) {
                    probes.insert(probe.name, format!("{:?}", sol.equilibrium_at(i)));
                }
            }
            let csv = dir.join("values.csv");
            let mut w = csv::Writer::from_path(&csv)?;
            w.write_record(["state", "trace", "value", "alpha_bits", "beta_bits"])?;
            for (i, s) in sol.states.iter().enumerate() {
                let ne = sol.equilibrium_at(i);
                w.write_record([
                    i.to_string(),
                    s.trace().to_string(),
                    sol.values[i].to_string(),
                    bit_string(&ne.alpha),
                    bit_string(&ne.beta),
                ])?;
            }
            w.flush()?;
            report.artifacts.push(csv);
            report.oracle = Some(OracleReport {
                equilibrium: format!("{:?}", sol.equilibrium),
                root_value: sol.root_value(),
                root_q: sol.root_q(),
                states: sol.states.len(),
                sweeps: sol.sweeps(),
                probes,
            });
        }
        Scenario::OpenCentralized | Scenario::OpenDistributed => {
            let game = cfg.open_game()?;
            report.seeds = fan_out(cfg, &game, &game.probes()?, &dir)?;
        }
        Scenario::ClosedDistributed => {
            let game = cfg.belief_game()?;
            let mut probes = vec![Probe::new(
                "b_uniform",
                cfg.closed_loop.initial_belief.clone(),
            )];
            if cfg.closed_loop.initial_belief.devices() == 2 {
                probes.push(Probe::new("b_skewed", presets::skewed_belief()));
            }
            report.seeds = fan_out(cfg, &game, &probes, &dir)?;
        }
    }
    for s in &report.seeds {
        report.artifacts.push(s.csv.clone());
        report.artifacts.extend(s.plot.clone());
    }
    let summary = dir.join("report.json");
    report.artifacts.push(summary.clone());
    fs::write(
        &summary,
        serde_json::to_string_pretty(&report).map_err(std::io::Error::other)?,
    )?;
    Ok(report)
}
