//! Tabular minimax value iteration on a truncated reachable-state graph.
//!
//! This is the reference solver the learners are checked against. States
//! reachable from the root within `depth` transitions are enumerated and
//! deduplicated; transitions leaving the frontier loop back to the state
//! they start from. On that finite graph
//!
//! ```text
//! V(s) ← max_β min_α [ r(s, α, β) + ρ V(δ(s, α, β)) ]
//! ```
//!
//! is iterated to a fixed point.

use crate::error::{Error, Result};
use crate::game::{joint_actions, side_actions, JointAction, MarkovGame};

/// States closer than this (max-abs) are merged.
pub const STATE_PROXIMITY: f64 = 1e-8;
/// Sweep cap for value iteration.
pub const MAX_SWEEPS: usize = 100_000;

#[derive(Debug, Clone)]
pub struct OracleSolution<S> {
    /// Enumerated states; index 0 is the root.
    pub states: Vec<S>,
    /// Converged values, aligned with `states`.
    pub values: Vec<f64>,
    /// Max-abs value change of every sweep.
    pub sweep_deltas: Vec<f64>,
    /// Pure equilibrium pair at the root.
    pub equilibrium: JointAction,
    rho: f64,
    devices: usize,
    /// `(next state, reward)` per state and joint-action index.
    edges: Vec<Vec<(usize, f64)>>,
}

impl<S> OracleSolution<S> {
    pub fn root_value(&self) -> f64 {
        self.values[0]
    }

    pub fn sweeps(&self) -> usize {
        self.sweep_deltas.len()
    }

    /// `Q(s, ·)` by joint-action index.
    pub fn q_row(&self, state: usize) -> Vec<f64> {
        q_row(&self.edges[state], &self.values, self.rho)
    }

    pub fn root_q(&self) -> Vec<f64> {
        self.q_row(0)
    }

    /// Equilibrium pair at any enumerated state.
    pub fn equilibrium_at(&self, state: usize) -> JointAction {
        let (_, alpha, beta) = max_min(&self.q_row(state), self.devices);
        JointAction::from_sides(alpha, beta, self.devices).expect("indices in range")
    }

    pub fn next_state(&self, state: usize, action: &JointAction) -> usize {
        self.edges[state][action.index()].0
    }
}

fn q_row(edges: &[(usize, f64)], values: &[f64], rho: f64) -> Vec<f64> {
    edges
        .iter()
        .map(|&(next, r)| r + rho * values[next])
        .collect()
}

/// `max_β min_α` over a row indexed by `α·2ⁿ + β`; lowest index wins ties.
fn max_min(row: &[f64], n: usize) -> (f64, usize, usize) {
    let k = side_actions(n);
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for beta in 0..k {
        let mut col = (f64::INFINITY, 0);
        for alpha in 0..k {
            let v = row[alpha * k + beta];
            if v < col.0 {
                col = (v, alpha);
            }
        }
        if col.0 > best.0 {
            best = (col.0, col.1, beta);
        }
    }
    best
}

pub fn solve_minimax<G: MarkovGame>(
    game: &G,
    root: &G::State,
    depth: usize,
    rho: f64,
    tol: f64,
) -> Result<OracleSolution<G::State>> {
    if depth == 0 {
        return Err(Error::Validation("oracle depth must be at least 1".into()));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Validation(format!(
            "rho must lie in (0, 1), got {rho}"
        )));
    }
    let n = game.devices();
    let actions: Vec<JointAction> = (0..joint_actions(n))
        .map(|i| JointAction::decode(i, n))
        .collect::<Result<_>>()?;

    let mut states = vec![root.clone()];
    let mut edges: Vec<Vec<(usize, f64)>> = Vec::new();
    let find = |states: &[G::State], s: &G::State| {
        states
            .iter()
            .position(|t| game.distance(t, s) <= STATE_PROXIMITY)
    };

    // breadth-first expansion; `edges[i]` is filled when state i is expanded
    let mut level_end = 1;
    let mut level = 0;
    let mut next_id = 0;
    while next_id < states.len() {
        if next_id == level_end {
            level += 1;
            level_end = states.len();
        }
        let frontier = level >= depth;
        let s = states[next_id].clone();
        let mut row = Vec::with_capacity(actions.len());
        for a in &actions {
            let (t, r) = game.step(&s, a)?;
            if !r.is_finite() {
                return Err(Error::NonFinite(format!(
                    "reward at oracle state {next_id}"
                )));
            }
            let target = match find(&states, &t) {
                Some(j) => j,
                None if frontier => next_id,
                None => {
                    states.push(t);
                    states.len() - 1
                }
            };
            row.push((target, r));
        }
        edges.push(row);
        next_id += 1;
    }

    let mut values = vec![0.0; states.len()];
    let mut sweep_deltas = Vec::new();
    loop {
        let next: Vec<f64> = edges
            .iter()
            .map(|row| max_min(&q_row(row, &values, rho), n).0)
            .collect();
        let delta = next
            .iter()
            .zip(&values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        values = next;
        sweep_deltas.push(delta);
        if delta <= tol {
            break;
        }
        if sweep_deltas.len() >= MAX_SWEEPS {
            return Err(Error::NoConvergence {
                iterations: MAX_SWEEPS,
            });
        }
    }

    let (_, alpha, beta) = max_min(&q_row(&edges[0], &values, rho), n);
    Ok(OracleSolution {
        states,
        values,
        sweep_deltas,
        equilibrium: JointAction::from_sides(alpha, beta, n)?,
        rho,
        devices: n,
        edges,
    })
}
