//! Closed-loop game over the attacker's belief about packet holding times.
//!
//! Row `i` of the belief matrix is a distribution over how many slots have
//! passed since the estimator last received device `i`'s packet, capped at
//! `m`. Packet success follows from the SINR of the chosen channel powers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::open::CostSchedule;
use crate::game::{JointAction, MarkovGame};
use crate::numerics::Matrix;

pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Transmit powers on both channel states, attack powers and noise power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPowers", into = "RawPowers")]
pub struct PowerSchedule {
    a0: Vec<f64>,
    a1: Vec<f64>,
    b1: Vec<f64>,
    n0: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPowers {
    a0: Vec<f64>,
    a1: Vec<f64>,
    b1: Vec<f64>,
    n0: f64,
}

impl TryFrom<RawPowers> for PowerSchedule {
    type Error = Error;

    fn try_from(r: RawPowers) -> Result<Self> {
        PowerSchedule::new(r.a0, r.a1, r.b1, r.n0)
    }
}

impl From<PowerSchedule> for RawPowers {
    fn from(p: PowerSchedule) -> Self {
        RawPowers {
            a0: p.a0,
            a1: p.a1,
            b1: p.b1,
            n0: p.n0,
        }
    }
}

impl PowerSchedule {
    pub fn new(a0: Vec<f64>, a1: Vec<f64>, b1: Vec<f64>, n0: f64) -> Result<Self> {
        let n = a0.len();
        if a1.len() != n || b1.len() != n {
            return Err(Error::Validation(
                "powers: a0, a1 and b1 must have one entry per device".into(),
            ));
        }
        if a0
            .iter()
            .chain(&a1)
            .chain(&b1)
            .any(|v| !(*v >= 0.0 && v.is_finite()))
        {
            return Err(Error::Validation(
                "powers must be finite and non-negative".into(),
            ));
        }
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(Error::Validation("powers: n0 must be positive".into()));
        }
        Ok(Self { a0, a1, b1, n0 })
    }

    pub fn devices(&self) -> usize {
        self.a0.len()
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    /// `cᵢ = a¹ᵢ − a⁰ᵢ` (clamped at 0) and `c_βⁱ = b¹ᵢ`.
    pub fn incremental_costs(&self) -> CostSchedule {
        let c = self
            .a1
            .iter()
            .zip(&self.a0)
            .map(|(a1, a0)| (a1 - a0).max(0.0))
            .collect();
        CostSchedule::new(c, self.b1.clone()).expect("powers are validated")
    }
}

/// Packet error rate as a function of SINR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerModel {
    /// `f(x) = e^(−x)`.
    Exponential,
    /// `f(x) = p` for every SINR.
    Constant { p: f64 },
}

impl PerModel {
    pub fn eval(&self, sinr: f64) -> f64 {
        match *self {
            PerModel::Exponential => (-sinr).exp(),
            PerModel::Constant { p } => p,
        }
    }

    /// `f(0) ≤ 1`, values in `[0, 1]` and non-increasing on a sample grid.
    pub fn validate(&self) -> Result<()> {
        let grid: Vec<f64> = (0..=400).map(|i| f64::from(i) * 0.05).collect();
        let vals: Vec<f64> = grid.iter().map(|&x| self.eval(x)).collect();
        if vals.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Validation("per: values must lie in [0, 1]".into()));
        }
        if vals.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Validation("per: must be non-increasing".into()));
        }
        Ok(())
    }
}

/// `a / (b + n₀)`.
pub fn sinr(a_power: f64, b_power: f64, n0: f64) -> f64 {
    a_power / (b_power + n0)
}

/// Per-device packet-success probabilities `tᵢ = 1 − f(SINRᵢ)`.
pub fn packet_success(a: &JointAction, powers: &PowerSchedule, per: &PerModel) -> Vec<f64> {
    (0..powers.devices())
        .map(|i| {
            let tx = if a.alpha[i] {
                powers.a1[i]
            } else {
                powers.a0[i]
            };
            let jam = if a.beta[i] { powers.b1[i] } else { 0.0 };
            (1.0 - per.eval(sinr(tx, jam, powers.n0))).clamp(0.0, 1.0)
        })
        .collect()
}

/// Row-stochastic `n × (m+1)` belief over holding times `0..=m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix", into = "Matrix")]
pub struct BeliefMatrix(Matrix);

impl BeliefMatrix {
    pub fn new(b: Matrix) -> Result<Self> {
        if b.cols() < 2 {
            return Err(Error::Validation(
                "belief needs at least two columns".into(),
            ));
        }
        for i in 0..b.rows() {
            let row = b.row(i);
            if row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Validation(format!(
                    "belief row {i} has entries outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::Validation(format!("belief row {i} sums to {sum}")));
            }
        }
        Ok(Self(b))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn devices(&self) -> usize {
        self.0.rows()
    }

    /// Holding-time cap `m`.
    pub fn cap(&self) -> usize {
        self.0.cols() - 1
    }

    /// Expected holding time summed over devices.
    pub fn expected_holding(&self) -> f64 {
        (0..self.0.rows())
            .map(|i| {
                self.0
                    .row(i)
                    .iter()
                    .enumerate()
                    .map(|(j, p)| p * j as f64)
                    .sum::<f64>()
            })
            .sum()
    }
}

impl TryFrom<Matrix> for BeliefMatrix {
    type Error = Error;

    fn try_from(m: Matrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<BeliefMatrix> for Matrix {
    fn from(b: BeliefMatrix) -> Self {
        b.0
    }
}

/// Propagates the belief one slot: reset to 0 with probability `tᵢ`,
/// otherwise age by one with the count saturating at `m`.
pub fn belief_step(b: &BeliefMatrix, t: &[f64]) -> Result<BeliefMatrix> {
    let n = b.devices();
    if t.len() != n {
        return Err(Error::DimensionMismatch {
            context: "success probabilities",
            expected: n,
            found: t.len(),
        });
    }
    let m = b.cap();
    let mut out = Matrix::zeros(n, m + 1);
    for (i, &ti) in t.iter().enumerate() {
        if !(0.0..=1.0).contains(&ti) {
            return Err(Error::Validation(format!(
                "success probability {ti} outside [0, 1]"
            )));
        }
        let miss = 1.0 - ti;
        let row = b.0.row(i);
        out[(i, 0)] = ti;
        for j in 1..m {
            out[(i, j)] = miss * row[j - 1];
        }
        out[(i, m)] = miss * (row[m - 1] + row[m]);
    }
    Ok(BeliefMatrix(out))
}

/// `Σᵢ Σⱼ B[i, j]·j + Σᵢ (cᵢαᵢ − c_βⁱβᵢ)` with `j` the 0-based holding time.
pub fn belief_reward(b: &BeliefMatrix, a: &JointAction, costs: &CostSchedule) -> f64 {
    b.expected_holding() + costs.action_cost(a)
}

/// Which belief the reward of a slot is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardTiming {
    /// Belief held when the actions are chosen.
    #[default]
    Pre,
    /// Belief after the slot's transition.
    Post,
}

/// One closed-loop slot: success probabilities, belief transition, reward.
pub fn belief_game_step(
    b: &BeliefMatrix,
    a: &JointAction,
    powers: &PowerSchedule,
    per: &PerModel,
    costs: &CostSchedule,
    timing: RewardTiming,
) -> Result<(BeliefMatrix, f64)> {
    let t = packet_success(a, powers, per);
    let next = belief_step(b, &t)?;
    let reward = match timing {
        RewardTiming::Pre => belief_reward(b, a, costs),
        RewardTiming::Post => belief_reward(&next, a, costs),
    };
    Ok((next, reward))
}

#[derive(Debug, Clone)]
pub struct BeliefGame {
    powers: PowerSchedule,
    per: PerModel,
    costs: CostSchedule,
    initial: BeliefMatrix,
    timing: RewardTiming,
}

impl BeliefGame {
    pub fn new(
        powers: PowerSchedule,
        per: PerModel,
        costs: CostSchedule,
        initial: BeliefMatrix,
        timing: RewardTiming,
    ) -> Result<Self> {
        per.validate()?;
        let n = powers.devices();
        if costs.devices() != n || initial.devices() != n {
            return Err(Error::Validation(format!(
                "closed loop: powers cover {n} devices, costs {}, belief {}",
                costs.devices(),
                initial.devices()
            )));
        }
        Ok(Self {
            powers,
            per,
            costs,
            initial,
            timing,
        })
    }

    pub fn powers(&self) -> &PowerSchedule {
        &self.powers
    }

    pub fn costs(&self) -> &CostSchedule {
        &self.costs
    }

    pub fn timing(&self) -> RewardTiming {
        self.timing
    }
}

impl MarkovGame for BeliefGame {
    type State = BeliefMatrix;

    fn devices(&self) -> usize {
        self.powers.devices()
    }

    fn initial_state(&self) -> BeliefMatrix {
        self.initial.clone()
    }

    fn step(&self, s: &BeliefMatrix, a: &JointAction) -> Result<(BeliefMatrix, f64)> {
        belief_game_step(s, a, &self.powers, &self.per, &self.costs, self.timing)
    }

    fn features(&self, s: &BeliefMatrix) -> Vec<f64> {
        s.matrix().as_slice().to_vec()
    }

    fn feature_len(&self) -> usize {
        self.initial.matrix().as_slice().len()
    }

    fn distance(&self, a: &BeliefMatrix, b: &BeliefMatrix) -> f64 {
        a.matrix().max_abs_diff(b.matrix())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn belief(rows: &[[f64; 2]]) -> BeliefMatrix {
        BeliefMatrix::new(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn sinr_examples() {
        assert!((sinr(0.3, 0.0, 0.1) - 3.0).abs() < 1e-12);
        assert_eq!(sinr(0.0, 0.7, 0.1), 0.0);
        assert!((sinr(0.7, 0.5, 0.1) - 7.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn packet_success_examples() {
        let powers = presets::benchmark_powers();
        let idle = JointAction::idle(2);
        let t = packet_success(&idle, &powers, &PerModel::Exponential);
        assert!((t[0] - (1.0 - (-3.0f64).exp())).abs() < 1e-12);
        assert!((t[0] - 0.95021).abs() < 1e-5);
        assert_eq!(
            packet_success(&idle, &powers, &PerModel::Constant { p: 0.0 }),
            vec![1.0; 2]
        );
        assert_eq!(
            packet_success(&idle, &powers, &PerModel::Constant { p: 1.0 }),
            vec![0.0; 2]
        );
    }

    #[test]
    fn belief_step_limits() {
        let b = presets::benchmark_initial_belief();
        let sure = belief_step(&b, &[1.0, 1.0]).unwrap();
        assert_eq!(sure.matrix(), belief(&[[1.0, 0.0], [1.0, 0.0]]).matrix());
        let b2 = belief(&[[0.3, 0.7], [1.0, 0.0]]);
        let lost = belief_step(&b2, &[0.0, 0.0]).unwrap();
        assert_eq!(lost.matrix(), belief(&[[0.0, 1.0], [0.0, 1.0]]).matrix());
    }

    #[test]
    fn belief_step_longer_horizon() {
        let b = BeliefMatrix::new(Matrix::from_rows(&[[0.1, 0.2, 0.3, 0.4]]).unwrap()).unwrap();
        let next = belief_step(&b, &[0.25]).unwrap();
        let want = [0.25, 0.075, 0.15, 0.525];
        for (got, want) in next.matrix().as_slice().iter().zip(want) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn belief_reward_examples() {
        let costs = CostSchedule::new(vec![3.0, 4.0], vec![1.5, 2.5]).unwrap();
        let idle = JointAction::idle(2);
        let half = presets::benchmark_initial_belief();
        assert!((belief_reward(&half, &idle, &costs) - 1.0).abs() < 1e-12);
        assert_eq!(
            belief_reward(&belief(&[[1.0, 0.0], [1.0, 0.0]]), &idle, &costs),
            0.0
        );
        let skew = presets::skewed_belief();
        let a = JointAction::from_bits(&[1, 0], &[0, 1]);
        assert!((belief_reward(&skew, &a, &costs) - (0.2 + 0.4 + 3.0 - 2.5)).abs() < 1e-12);
    }

    #[test]
    fn game_step_trivial_channels() {
        let powers = presets::benchmark_powers();
        let costs = presets::benchmark_belief_costs();
        let idle = JointAction::idle(2);
        let b = presets::skewed_belief();
        let (next, r) = belief_game_step(
            &b,
            &idle,
            &powers,
            &PerModel::Constant { p: 0.0 },
            &costs,
            RewardTiming::Post,
        )
        .unwrap();
        assert_eq!(next.matrix(), belief(&[[1.0, 0.0], [1.0, 0.0]]).matrix());
        assert_eq!(r, 0.0);

        let fresh = belief(&[[1.0, 0.0], [1.0, 0.0]]);
        let dead = PerModel::Constant { p: 1.0 };
        let (next, r) =
            belief_game_step(&fresh, &idle, &powers, &dead, &costs, RewardTiming::Post).unwrap();
        assert_eq!(next.matrix(), belief(&[[0.0, 1.0], [0.0, 1.0]]).matrix());
        assert_eq!(r, 2.0);
        let (_, r) =
            belief_game_step(&fresh, &idle, &powers, &dead, &costs, RewardTiming::Pre).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn rejects_invalid_beliefs() {
        assert!(BeliefMatrix::new(Matrix::from_rows(&[[0.5, 0.6]]).unwrap()).is_err());
        assert!(BeliefMatrix::new(Matrix::from_rows(&[[1.5, -0.5]]).unwrap()).is_err());
    }

    #[test]
    fn incremental_costs_of_benchmark_powers() {
        let c = presets::benchmark_belief_costs();
        assert!((c.device()[0] - 0.4).abs() < 1e-12);
        assert!((c.device()[1] - 0.6).abs() < 1e-12);
        assert_eq!(c.attack(), &[0.5, 0.5]);
    }
}
