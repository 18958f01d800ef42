//! Open-loop game: both players observe the estimator's error covariance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{
    masked_update, steady_state_covariance, ErrorCovariance, SystemModel, STEADY_STATE_MAX_ITER,
    STEADY_STATE_TOLERANCE,
};
use crate::game::oracle::{solve_minimax, OracleSolution};
use crate::game::{bit_string, side_actions, side_decode, JointAction, MarkovGame, Probe};

/// Per-device secure-channel cost `c` and per-channel attack cost `c_β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCosts", into = "RawCosts")]
pub struct CostSchedule {
    c: Vec<f64>,
    c_beta: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCosts {
    c: Vec<f64>,
    c_beta: Vec<f64>,
}

impl TryFrom<RawCosts> for CostSchedule {
    type Error = Error;

    fn try_from(raw: RawCosts) -> Result<Self> {
        CostSchedule::new(raw.c, raw.c_beta)
    }
}

impl From<CostSchedule> for RawCosts {
    fn from(c: CostSchedule) -> Self {
        RawCosts {
            c: c.c,
            c_beta: c.c_beta,
        }
    }
}

impl CostSchedule {
    pub fn new(c: Vec<f64>, c_beta: Vec<f64>) -> Result<Self> {
        if c.len() != c_beta.len() {
            return Err(Error::Validation(format!(
                "costs: {} device costs but {} attack costs",
                c.len(),
                c_beta.len()
            )));
        }
        if c.iter()
            .chain(&c_beta)
            .any(|v| !(*v >= 0.0 && v.is_finite()))
        {
            return Err(Error::Validation(
                "costs must be finite and non-negative".into(),
            ));
        }
        Ok(Self { c, c_beta })
    }

    pub fn device(&self) -> &[f64] {
        &self.c
    }

    pub fn attack(&self) -> &[f64] {
        &self.c_beta
    }

    pub fn devices(&self) -> usize {
        self.c.len()
    }

    /// `Σᵢ (cᵢ αᵢ − c_βⁱ βᵢ)`.
    pub fn action_cost(&self, a: &JointAction) -> f64 {
        self.c
            .iter()
            .zip(&self.c_beta)
            .zip(a.alpha.iter().zip(&a.beta))
            .map(|((&c, &d), (&al, &be))| (if al { c } else { 0.0 }) - (if be { d } else { 0.0 }))
            .sum()
    }
}

/// A packet on channel `i` is lost only when the device uses the unprotected
/// channel and the attacker jams it.
pub fn arrival_mask(a: &JointAction) -> Vec<bool> {
    a.alpha
        .iter()
        .zip(&a.beta)
        .map(|(&secure, &attacked)| secure || !attacked)
        .collect()
}

pub type GameState = ErrorCovariance;

/// The infinite-horizon discounted covariance game.
#[derive(Debug, Clone)]
pub struct DiscountedGame {
    model: SystemModel,
    costs: CostSchedule,
    rho: f64,
    steady: ErrorCovariance,
}

impl DiscountedGame {
    pub fn new(model: SystemModel, costs: CostSchedule, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Validation(format!(
                "rho must lie in (0, 1), got {rho}"
            )));
        }
        if costs.devices() != model.devices() {
            return Err(Error::Validation(format!(
                "costs cover {} devices, model has {}",
                costs.devices(),
                model.devices()
            )));
        }
        let steady =
            steady_state_covariance(&model, STEADY_STATE_TOLERANCE, STEADY_STATE_MAX_ITER)?;
        Ok(Self {
            model,
            costs,
            rho,
            steady,
        })
    }

    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    pub fn costs(&self) -> &CostSchedule {
        &self.costs
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn steady_state(&self) -> &ErrorCovariance {
        &self.steady
    }

    /// Minimax value iteration on the graph reachable from `P̄` in `depth` steps.
    /// `P̄` followed by its one-step successors under every arrival pattern
    /// with at least one loss, named `pbar` and `pbar_g<γ bits>`.
    pub fn probes(&self) -> Result<Vec<Probe<GameState>>> {
        let n = self.model.devices();
        let mut out = vec![Probe::new("pbar", self.steady.clone())];
        for mask in (0..side_actions(n) - 1).rev() {
            let gamma = side_decode(mask, n)?;
            let p = masked_update(&self.steady, &gamma, &self.model)?;
            out.push(Probe::new(format!("pbar_g{}", bit_string(&gamma)), p));
        }
        Ok(out)
    }

    pub fn oracle(&self, depth: usize, tol: f64) -> Result<OracleSolution<GameState>> {
        solve_minimax(self, &self.steady, depth, self.rho, tol)
    }
}

/// `P' = F(P, γ(a))`, reward `trace(P') + Σ (cᵢαᵢ − c_βⁱβᵢ)`.
pub fn step(s: &GameState, a: &JointAction, g: &DiscountedGame) -> Result<(GameState, f64)> {
    if a.devices() != g.model.devices() {
        return Err(Error::DimensionMismatch {
            context: "joint action",
            expected: g.model.devices(),
            found: a.devices(),
        });
    }
    let next = masked_update(s, &arrival_mask(a), &g.model)?;
    let reward = next.trace() + g.costs.action_cost(a);
    Ok((next, reward))
}

/// `sign(x) ln(1 + |x|)`: covariances after long loss bursts grow
/// geometrically, so network inputs are log-compressed.
fn squash(x: f64) -> f64 {
    x.signum() * x.abs().ln_1p()
}

impl MarkovGame for DiscountedGame {
    type State = GameState;

    fn devices(&self) -> usize {
        self.model.devices()
    }

    fn initial_state(&self) -> GameState {
        self.steady.clone()
    }

    fn step(&self, s: &GameState, a: &JointAction) -> Result<(GameState, f64)> {
        step(s, a, self)
    }

    fn features(&self, s: &GameState) -> Vec<f64> {
        s.upper_triangle().into_iter().map(squash).collect()
    }

    fn feature_len(&self) -> usize {
        let m = self.model.state_dim();
        m * (m + 1) / 2
    }

    fn distance(&self, a: &GameState, b: &GameState) -> f64 {
        a.matrix().max_abs_diff(b.matrix())
    }
}
