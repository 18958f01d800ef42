//! Minimax deep Q-learning for the estimation game.
//!
//! [`run_centralized`] trains one network over all `2²ⁿ` joint actions with
//! the TD target `r + ρ max_β min_α Q⁻(s', α, β)`. [`run_distributed`] gives
//! the devices and the attacker their own `2ⁿ`-output networks with targets
//! `r + ρ min_α Q⁻ˢ(s', α)` and `r + ρ max_β Q⁻ᵃ(s', β)`. Both work over any
//! [`MarkovGame`](crate::game::MarkovGame).

mod centralized;
mod distributed;
mod log;
mod replay;
mod track;

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::game::Probe;
use crate::game::{side_actions, JointAction};
use crate::neural::QNetwork;

pub use centralized::{run_centralized, CentralizedRun};
pub use distributed::{run_distributed, DistributedRun};
pub use log::{head_tail_means, EpisodeLog, LogRow};
pub use replay::{ReplayBuffer, TransitionRecord};

/// Hyperparameters shared by both learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub rho: f64,
    /// Learning rate of the joint network (centralized) or the device network.
    pub eta: f64,
    /// Learning rate of the attacker network (distributed only).
    pub eta_attacker: f64,
    /// Probability of a uniformly random action.
    pub epsilon: f64,
    /// Target networks are synchronized every `sync_period` steps.
    pub sync_period: usize,
    pub batch_size: usize,
    pub replay_capacity: usize,
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    pub max_episodes: usize,
    pub episode_len: usize,
    pub step_cap: usize,
    pub convergence_threshold: f64,
    pub convergence_window: usize,
    /// Probe Q-rows are written to the log every this many steps.
    pub q_log_period: usize,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            rho: 0.8,
            eta: 0.1,
            eta_attacker: 0.01,
            epsilon: 0.9,
            sync_period: 100,
            batch_size: 32,
            replay_capacity: 10_000,
            hidden: vec![64],
            max_episodes: 40,
            episode_len: 500,
            step_cap: 20_000,
            convergence_threshold: 1e-4,
            convergence_window: 200,
            q_log_period: 50,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    /// Defaults for the centralized learner.
    pub fn centralized() -> Self {
        Self::default()
    }

    /// Defaults for the distributed learner: both learning rates 0.01.
    pub fn distributed() -> Self {
        Self {
            eta: 0.01,
            eta_attacker: 0.01,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |what: &str| Err(Error::Validation(what.to_string()));
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return fail("rho");
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return fail("eta");
        }
        if !(self.eta_attacker > 0.0 && self.eta_attacker.is_finite()) {
            return fail("eta_attacker");
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return fail("epsilon");
        }
        if !(self.convergence_threshold > 0.0) {
            return fail("convergence_threshold");
        }
        for (name, v) in [
            ("sync_period", self.sync_period),
            ("batch_size", self.batch_size),
            ("replay_capacity", self.replay_capacity),
            ("max_episodes", self.max_episodes),
            ("episode_len", self.episode_len),
            ("step_cap", self.step_cap),
            ("convergence_window", self.convergence_window),
            ("q_log_period", self.q_log_period),
        ] {
            if v == 0 {
                return fail(name);
            }
        }
        if self.batch_size > self.replay_capacity {
            return fail("batch_size");
        }
        if self.hidden.contains(&0) {
            return fail("hidden");
        }
        Ok(())
    }

    pub(crate) fn layer_sizes(&self, inputs: usize, outputs: usize) -> Vec<usize> {
        std::iter::once(inputs)
            .chain(self.hidden.iter().copied())
            .chain(std::iter::once(outputs))
            .collect()
    }
}

/// A training loss this many times above the first one (or above 1, if
/// larger) is reported as divergence.
pub const DIVERGENCE_RATIO: f64 = 1e15;

/// Watches a loss series for blow-up.
#[derive(Debug, Clone, Default)]
pub(crate) struct DivergenceGuard {
    first: Option<f64>,
}

impl DivergenceGuard {
    pub fn check(&mut self, loss: Option<f64>, who: &str) -> Result<()> {
        let Some(loss) = loss else { return Ok(()) };
        let first = *self.first.get_or_insert(loss);
        if !loss.is_finite() || loss > DIVERGENCE_RATIO * first.max(1.0) {
            return Err(Error::NonFinite(format!(
                "{who} loss diverged to {loss:e} (first loss {first:e}); lower the learning rate"
            )));
        }
        Ok(())
    }
}

/// Index of the smallest entry, lowest index on ties.
pub fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |best, (i, &v)| if v < best.1 { (i, v) } else { best },
        )
        .0
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        })
        .0
}

fn devices_of_joint_row(len: usize) -> Result<usize> {
    let bits = len.trailing_zeros() as usize;
    if len == 0 || !len.is_power_of_two() || !bits.is_multiple_of(2) {
        return Err(Error::Validation(format!(
            "joint Q-row length {len} is not 2^(2n)"
        )));
    }
    Ok(bits / 2)
}

/// `(max_β min_α q[α, β], α*, β*)` on a row indexed by `α·2ⁿ + β`.
///
/// Ties go to the lowest index on both sides.
pub fn max_min(q: &[f64]) -> Result<(f64, usize, usize)> {
    let n = devices_of_joint_row(q.len())?;
    let k = side_actions(n);
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for beta in 0..k {
        let column: Vec<f64> = (0..k).map(|alpha| q[alpha * k + beta]).collect();
        let alpha = argmin(&column);
        if column[alpha] > best.0 {
            best = (column[alpha], alpha, beta);
        }
    }
    Ok(best)
}

/// `r + ρ max_β min_α q_next[α, β]`.
pub fn minimax_target(reward: f64, rho: f64, q_next: &[f64]) -> Result<f64> {
    Ok(reward + rho * max_min(q_next)?.0)
}

/// Greedy joint action of a centralized Q-row.
pub fn greedy_joint(q_row: &[f64]) -> Result<JointAction> {
    let n = devices_of_joint_row(q_row.len())?;
    let (_, alpha, beta) = max_min(q_row)?;
    JointAction::from_sides(alpha, beta, n)
}

/// With probability `epsilon` a uniformly random action in `0..n_actions`,
/// otherwise `greedy`. Consumes exactly one draw from `rng`.
pub fn epsilon_greedy<R: Rng + ?Sized>(
    greedy: usize,
    n_actions: usize,
    epsilon: f64,
    rng: &mut R,
) -> usize {
    let u: f64 = rng.gen();
    if u < epsilon {
        ((u / epsilon) * n_actions as f64).min((n_actions - 1) as f64) as usize
    } else {
        greedy
    }
}

/// Extracted equilibrium pair per probe state.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    pub entries: BTreeMap<String, JointAction>,
}

impl PolicyTable {
    pub fn get(&self, probe: &str) -> Option<&JointAction> {
        self.entries.get(probe)
    }

    /// True when every probe maps to `action`.
    pub fn all_equal(&self, action: &JointAction) -> bool {
        !self.entries.is_empty() && self.entries.values().all(|a| a == action)
    }
}

/// One side's policy over visited states, keyed by [`MarkovGame::state_key`](crate::game::MarkovGame::state_key).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SidePolicy {
    pub entries: BTreeMap<String, usize>,
    /// Number of times an entry was changed after its initialization.
    pub updates: usize,
}

/// Trained networks from either learner.
#[derive(Debug, Clone, Copy)]
pub enum Learned<'a> {
    Centralized(&'a QNetwork),
    Distributed {
        device: &'a QNetwork,
        attacker: &'a QNetwork,
    },
}

/// Access to the trained networks of a finished run.
pub trait LearnedNets {
    fn learned(&self) -> Learned<'_>;
}

/// Equilibrium pair at each named feature vector.
pub fn extract_ne(learned: Learned<'_>, probes: &[(String, Vec<f64>)]) -> Result<PolicyTable> {
    let mut table = PolicyTable::default();
    for (name, x) in probes {
        let action = match learned {
            Learned::Centralized(net) => greedy_joint(&net.forward(x)?)?,
            Learned::Distributed { device, attacker } => {
                let qd = device.forward(x)?;
                let qa = attacker.forward(x)?;
                let n = devices_of_joint_row(qd.len() * qa.len())?;
                JointAction::from_sides(argmin(&qd), argmax(&qa), n)?
            }
        };
        table.entries.insert(name.clone(), action);
    }
    Ok(table)
}
