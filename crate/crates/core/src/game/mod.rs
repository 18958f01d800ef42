//! Markov games between the devices (minimizers) and the attacker (maximizer).

pub mod closed;
pub mod open;
pub mod oracle;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported device count; joint actions are indexed by `2n` bits.
pub const MAX_DEVICES: usize = 12;

/// Devices' channel choices `α` and the attacker's targets `β`.
///
/// `alpha[i]` set means device `i` transmits on the attack-resistant
/// channel; `beta[i]` set means the attacker jams channel `i`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JointAction {
    pub alpha: Vec<bool>,
    pub beta: Vec<bool>,
}

impl JointAction {
    pub fn new(alpha: Vec<bool>, beta: Vec<bool>) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::DimensionMismatch {
                context: "joint action",
                expected: alpha.len(),
                found: beta.len(),
            });
        }
        Ok(Self { alpha, beta })
    }

    /// Both sides from 0/1 slices, convenient in tests.
    pub fn from_bits(alpha: &[u8], beta: &[u8]) -> Self {
        assert_eq!(alpha.len(), beta.len());
        Self {
            alpha: alpha.iter().map(|&b| b != 0).collect(),
            beta: beta.iter().map(|&b| b != 0).collect(),
        }
    }

    pub fn idle(n: usize) -> Self {
        Self {
            alpha: vec![false; n],
            beta: vec![false; n],
        }
    }

    pub fn devices(&self) -> usize {
        self.alpha.len()
    }

    /// `(α₁…αₙ β₁…βₙ)` read as a binary number, most significant bit first.
    pub fn index(&self) -> usize {
        side_index(&self.alpha) << self.devices() | side_index(&self.beta)
    }

    pub fn decode(index: usize, n: usize) -> Result<Self> {
        let bound = joint_actions(n);
        if index >= bound {
            return Err(Error::IndexOutOfRange { index, bound });
        }
        Ok(Self {
            alpha: side_decode(index >> n, n)?,
            beta: side_decode(index & (side_actions(n) - 1), n)?,
        })
    }

    pub fn from_sides(alpha: usize, beta: usize, n: usize) -> Result<Self> {
        Ok(Self {
            alpha: side_decode(alpha, n)?,
            beta: side_decode(beta, n)?,
        })
    }

    pub fn alpha_index(&self) -> usize {
        side_index(&self.alpha)
    }

    pub fn beta_index(&self) -> usize {
        side_index(&self.beta)
    }
}

impl fmt::Debug for JointAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(α={}, β={})",
            bit_string(&self.alpha),
            bit_string(&self.beta)
        )
    }
}

/// Number of own-side actions, `2ⁿ`.
pub fn side_actions(n: usize) -> usize {
    assert!(n <= MAX_DEVICES, "at most {MAX_DEVICES} devices supported");
    1 << n
}

/// Number of joint actions, `2²ⁿ`.
pub fn joint_actions(n: usize) -> usize {
    side_actions(n) * side_actions(n)
}

pub fn side_index(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| acc << 1 | usize::from(b))
}

pub fn side_decode(index: usize, n: usize) -> Result<Vec<bool>> {
    let bound = side_actions(n);
    if index >= bound {
        return Err(Error::IndexOutOfRange { index, bound });
    }
    Ok((0..n).map(|i| index >> (n - 1 - i) & 1 == 1).collect())
}

/// Bits as a string such as `"01"`.
pub fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// A named state at which Q-values are tracked and equilibria extracted.
#[derive(Debug, Clone)]
pub struct Probe<S> {
    pub name: String,
    pub state: S,
}

impl<S> Probe<S> {
    pub fn new(name: impl Into<String>, state: S) -> Self {
        Self {
            name: name.into(),
            state,
        }
    }
}

/// A two-player zero-sum Markov game with a common scalar reward.
///
/// Devices minimize the discounted reward and the attacker maximizes it.
pub trait MarkovGame {
    type State: Clone + fmt::Debug;

    fn devices(&self) -> usize;

    /// State every episode starts from.
    fn initial_state(&self) -> Self::State;

    /// Transition and immediate reward.
    fn step(&self, s: &Self::State, a: &JointAction) -> Result<(Self::State, f64)>;

    /// Network input for a state.
    fn features(&self, s: &Self::State) -> Vec<f64>;

    fn feature_len(&self) -> usize;

    /// Max-abs distance used to deduplicate states.
    fn distance(&self, a: &Self::State, b: &Self::State) -> f64;

    /// Stable key identifying a state in policy tables.
    fn state_key(&self, s: &Self::State) -> String {
        self.features(s)
            .iter()
            .map(|v| format!("{v:.9e}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}
