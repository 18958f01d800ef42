//! Remote state estimation under jamming, posed as a two-player zero-sum
//! stochastic game and solved with minimax deep Q-learning.
//!
//! - [`estimation`]: the linear process, lossy Kalman filter and error
//!   covariance recursion.
//! - [`game`]: the open-loop covariance game, the closed-loop belief game and
//!   a tabular minimax oracle.
//! - [`neural`]: a small dense Q-network with manual backprop.
//! - [`drl`]: centralized and distributed minimax DQN.
//! - [`harness`]: TOML scenarios, CSV logs, plots and run summaries.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod drl;
pub mod error;
pub mod estimation;
pub mod game;
pub mod harness;
pub mod neural;
pub mod numerics;
pub mod presets;
pub mod rng;

pub use error::{Error, Result};
pub use numerics::Matrix;
