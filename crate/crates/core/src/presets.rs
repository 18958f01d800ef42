//! The two-device benchmark used throughout the examples and tests.

use crate::estimation::{
    steady_state_covariance, ErrorCovariance, SystemModel, STEADY_STATE_MAX_ITER,
    STEADY_STATE_TOLERANCE,
};
use crate::game::closed::{BeliefGame, BeliefMatrix, PerModel, PowerSchedule, RewardTiming};
use crate::game::open::{CostSchedule, DiscountedGame};
use crate::game::Probe;
use crate::numerics::Matrix;

pub const DISCOUNT: f64 = 0.8;

/// `A = [[2, 1], [0.7, 0.8]]`, `C = diag(1, 2)`, `Q = 0.6 I`, `R = diag(0.7, 0.4)`, `Π₀ = I`.
pub fn benchmark_model() -> SystemModel {
    SystemModel::new(
        Matrix::from_rows(&[[2.0, 1.0], [0.7, 0.8]]).unwrap(),
        Matrix::from_rows(&[[1.0, 0.0], [0.0, 2.0]]).unwrap(),
        Matrix::diag(&[0.6, 0.6]),
        vec![0.7, 0.4],
        Matrix::identity(2),
    )
    .expect("benchmark model is valid")
}

pub fn benchmark_steady_state() -> ErrorCovariance {
    steady_state_covariance(
        &benchmark_model(),
        STEADY_STATE_TOLERANCE,
        STEADY_STATE_MAX_ITER,
    )
    .expect("benchmark model converges")
}

/// Secure-channel costs (7, 5) and attack costs (6, 6).
pub fn benchmark_costs() -> CostSchedule {
    CostSchedule::new(vec![7.0, 5.0], vec![6.0, 6.0]).unwrap()
}

pub fn benchmark_powers() -> PowerSchedule {
    PowerSchedule::new(vec![0.3, 0.2], vec![0.7, 0.8], vec![0.5, 0.5], 0.1).unwrap()
}

/// Closed-loop costs: extra power of the secure channel and the attack power.
pub fn benchmark_belief_costs() -> CostSchedule {
    benchmark_powers().incremental_costs()
}

pub fn benchmark_per() -> PerModel {
    PerModel::Exponential
}

pub fn benchmark_initial_belief() -> BeliefMatrix {
    BeliefMatrix::new(Matrix::from_rows(&[[0.5, 0.5], [0.5, 0.5]]).unwrap()).unwrap()
}

/// Second closed-loop probe belief.
pub fn skewed_belief() -> BeliefMatrix {
    BeliefMatrix::new(Matrix::from_rows(&[[0.8, 0.2], [0.6, 0.4]]).unwrap()).unwrap()
}

/// The two closed-loop probe beliefs.
pub fn belief_probes() -> Vec<Probe<BeliefMatrix>> {
    vec![
        Probe::new("b_uniform", benchmark_initial_belief()),
        Probe::new("b_skewed", skewed_belief()),
    ]
}

pub fn benchmark_open_game() -> DiscountedGame {
    DiscountedGame::new(benchmark_model(), benchmark_costs(), DISCOUNT)
        .expect("benchmark game is valid")
}

pub fn benchmark_belief_game() -> BeliefGame {
    BeliefGame::new(
        benchmark_powers(),
        benchmark_per(),
        benchmark_belief_costs(),
        benchmark_initial_belief(),
        RewardTiming::default(),
    )
    .expect("benchmark belief game is valid")
}
