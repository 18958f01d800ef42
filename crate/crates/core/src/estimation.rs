//! Remote state estimation: process simulation, innovations, the Kalman
//! recursion with intermittent arrivals, and its steady state.
//!
//! The covariance map used everywhere is
//!
//! ```text
//! h(X)    = A X Aᵀ + Q
//! F(X, γ) = (I − K̃ C̃) h(X),   C̃ = diag(γ) C,  R̃ = diag(γ) R diag(γ)
//! K̃       = h(X) C̃ᵀ (C̃ h(X) C̃ᵀ + R̃)†
//! ```
//!
//! With every packet delivered `F(·, 1)` is one prediction plus update sweep,
//! and its fixed point is the steady-state (posterior) covariance `P̄`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{masked_pseudo_inverse, Matrix};
use crate::rng::{seeded, Gaussian};

/// Tolerance for the symmetric-PSD invariant of covariance matrices.
pub const COVARIANCE_TOLERANCE: f64 = 1e-9;
/// Default fixed-point tolerance of the steady-state iteration.
pub const STEADY_STATE_TOLERANCE: f64 = 1e-10;
/// Default iteration cap of the steady-state iteration.
pub const STEADY_STATE_MAX_ITER: usize = 10_000;
/// Search horizon of [`recovery_horizon`].
pub const RECOVERY_SEARCH_LIMIT: usize = 1000;

/// Linear process `x' = A x + w` observed by `n` scalar devices `yᵢ = Cᵢ x + vᵢ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSystemModel", into = "RawSystemModel")]
pub struct SystemModel {
    a: Matrix,
    c: Matrix,
    q: Matrix,
    r: Vec<f64>,
    pi0: Matrix,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystemModel {
    a: Matrix,
    c: Matrix,
    q: Matrix,
    r: Vec<f64>,
    pi0: Matrix,
}

impl TryFrom<RawSystemModel> for SystemModel {
    type Error = Error;

    fn try_from(raw: RawSystemModel) -> Result<Self> {
        SystemModel::new(raw.a, raw.c, raw.q, raw.r, raw.pi0)
    }
}

impl From<SystemModel> for RawSystemModel {
    fn from(m: SystemModel) -> Self {
        RawSystemModel {
            a: m.a,
            c: m.c,
            q: m.q,
            r: m.r,
            pi0: m.pi0,
        }
    }
}

impl SystemModel {
    /// Validates dimensions, noise covariances and observability of `(A, C)`.
    ///
    /// `r` holds the diagonal of the measurement-noise covariance, one entry
    /// per device.
    pub fn new(a: Matrix, c: Matrix, q: Matrix, r: Vec<f64>, pi0: Matrix) -> Result<Self> {
        let m = a.rows();
        if !a.is_square() {
            return Err(Error::InvalidModel("A must be square".into()));
        }
        if c.cols() != m {
            return Err(Error::InvalidModel(format!(
                "C has {} columns, state dimension is {m}",
                c.cols()
            )));
        }
        if c.rows() == 0 || r.len() != c.rows() {
            return Err(Error::InvalidModel(format!(
                "R has {} entries for {} devices",
                r.len(),
                c.rows()
            )));
        }
        for (name, x) in [("Q", &q), ("Pi0", &pi0)] {
            if x.rows() != m || x.cols() != m {
                return Err(Error::InvalidModel(format!("{name} must be {m}x{m}")));
            }
            if !x.is_psd(COVARIANCE_TOLERANCE) {
                return Err(Error::InvalidModel(format!(
                    "{name} must be symmetric positive semi-definite"
                )));
            }
        }
        if let Some(bad) = r.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidModel(format!(
                "measurement noise variances must be positive, got {bad}"
            )));
        }
        let model = Self { a, c, q, r, pi0 };
        let rank = model.observability_rank();
        if rank != m {
            return Err(Error::InvalidModel(format!(
                "(A, C) is not observable: observability rank {rank} < {m}"
            )));
        }
        Ok(model)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    /// Diagonal of the measurement-noise covariance.
    pub fn r_diag(&self) -> &[f64] {
        &self.r
    }

    pub fn r(&self) -> Matrix {
        Matrix::diag(&self.r)
    }

    pub fn pi0(&self) -> &Matrix {
        &self.pi0
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn devices(&self) -> usize {
        self.c.rows()
    }

    /// Copy of the model with a different initial covariance.
    pub fn with_pi0(&self, pi0: Matrix) -> Result<Self> {
        Self::new(
            self.a.clone(),
            self.c.clone(),
            self.q.clone(),
            self.r.clone(),
            pi0,
        )
    }

    /// Numeric rank of `[C; CA; …; CA^(M−1)]`.
    pub fn observability_rank(&self) -> usize {
        let m = self.state_dim();
        let mut gram = Matrix::zeros(m, m);
        let mut block = self.c.clone();
        for _ in 0..m {
            gram = &gram + &(&block.transpose() * &block);
            block = &block * &self.a;
        }
        let ev = gram.symmetric_eigenvalues();
        let top = ev.last().copied().unwrap_or(0.0).abs();
        if top == 0.0 {
            return 0;
        }
        ev.iter().filter(|&&e| e > 1e-10 * top).count()
    }
}

/// Symmetric PSD estimation-error covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix", into = "Matrix")]
pub struct ErrorCovariance(Matrix);

impl ErrorCovariance {
    pub fn new(p: Matrix) -> Result<Self> {
        if !p.is_symmetric(COVARIANCE_TOLERANCE) {
            return Err(Error::InvalidModel("covariance is not symmetric".into()));
        }
        if !p.is_psd(COVARIANCE_TOLERANCE) {
            return Err(Error::InvalidModel(
                "covariance is not positive semi-definite".into(),
            ));
        }
        Ok(Self(p))
    }

    /// Wraps a matrix produced by a symmetrized covariance recursion.
    pub(crate) fn from_recursion(p: Matrix) -> Self {
        debug_assert!(p.is_symmetric(0.0));
        Self(p)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Checks the symmetric-PSD invariant at the crate tolerance.
    pub fn is_valid(&self) -> bool {
        self.0.is_psd(COVARIANCE_TOLERANCE)
    }

    /// Upper triangle, row by row: `M(M+1)/2` values.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let m = self.0.rows();
        (0..m)
            .flat_map(|i| (i..m).map(move |j| (i, j)))
            .map(|ij| self.0[ij])
            .collect()
    }
}

impl TryFrom<Matrix> for ErrorCovariance {
    type Error = Error;

    fn try_from(m: Matrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<ErrorCovariance> for Matrix {
    fn from(p: ErrorCovariance) -> Self {
        p.0
    }
}

/// Remote estimator state after an update.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    /// Updated estimate x̂ₖ.
    pub x_hat: Vec<f64>,
    /// Prediction x̂ₖ⁻ that produced it.
    pub x_hat_pred: Vec<f64>,
    pub p: ErrorCovariance,
}

impl EstimatorState {
    pub fn new(x_hat: Vec<f64>, p: ErrorCovariance) -> Self {
        Self {
            x_hat_pred: x_hat.clone(),
            x_hat,
            p,
        }
    }

    /// `A x̂`, the prediction the estimator feeds back to the devices.
    pub fn prediction(&self, model: &SystemModel) -> Vec<f64> {
        model.a().mul_vec(&self.x_hat)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub measurements: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Simulates `steps` slots with `x₀ ~ N(0, Π₀)`.
pub fn simulate_process(model: &SystemModel, steps: usize, seed: u64) -> Result<Trajectory> {
    let mut noise = Gaussian::new(seeded(seed));
    let l0 = model.pi0().psd_cholesky(COVARIANCE_TOLERANCE)?;
    let x0 = l0.mul_vec(&noise.standard_vec(model.state_dim()));
    simulate_with(model, x0, steps, &mut noise)
}

/// Same as [`simulate_process`] but starting from a fixed `x₀`.
pub fn simulate_process_from(
    model: &SystemModel,
    x0: Vec<f64>,
    steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    if x0.len() != model.state_dim() {
        return Err(Error::DimensionMismatch {
            context: "initial state",
            expected: model.state_dim(),
            found: x0.len(),
        });
    }
    let mut noise = Gaussian::new(seeded(seed));
    simulate_with(model, x0, steps, &mut noise)
}

fn simulate_with(
    model: &SystemModel,
    x0: Vec<f64>,
    steps: usize,
    noise: &mut Gaussian,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::Validation("steps must be at least 1".into()));
    }
    let lq = model.q().psd_cholesky(COVARIANCE_TOLERANCE)?;
    let r_sd: Vec<f64> = model.r_diag().iter().map(|r| r.sqrt()).collect();
    let m = model.state_dim();
    let mut states = Vec::with_capacity(steps);
    let mut measurements = Vec::with_capacity(steps);
    let mut x = x0;
    for _ in 0..steps {
        let y: Vec<f64> = model
            .c()
            .mul_vec(&x)
            .into_iter()
            .zip(&r_sd)
            .map(|(cx, sd)| cx + sd * noise.standard())
            .collect();
        let w = lq.mul_vec(&noise.standard_vec(m));
        let next: Vec<f64> = model
            .a()
            .mul_vec(&x)
            .into_iter()
            .zip(w)
            .map(|(ax, w)| ax + w)
            .collect();
        states.push(std::mem::replace(&mut x, next));
        measurements.push(y);
    }
    Ok(Trajectory {
        states,
        measurements,
    })
}

/// Per-device innovation `zᵢ = yᵢ − Cᵢ x̂⁻`.
pub fn innovation(y: &[f64], x_hat_pred: &[f64], model: &SystemModel) -> Result<Vec<f64>> {
    if y.len() != model.devices() {
        return Err(Error::DimensionMismatch {
            context: "measurement vector",
            expected: model.devices(),
            found: y.len(),
        });
    }
    if x_hat_pred.len() != model.state_dim() {
        return Err(Error::DimensionMismatch {
            context: "predicted state",
            expected: model.state_dim(),
            found: x_hat_pred.len(),
        });
    }
    Ok(y.iter()
        .zip(model.c().mul_vec(x_hat_pred))
        .map(|(y, cx)| y - cx)
        .collect())
}

/// Prediction step `h(X) = A X Aᵀ + Q`.
pub fn predict_covariance(x: &ErrorCovariance, model: &SystemModel) -> ErrorCovariance {
    let a = model.a();
    let ax = a * x.matrix();
    let h = &(&ax * &a.transpose()) + model.q();
    ErrorCovariance::from_recursion(h.symmetrize())
}

fn masked_gain(
    x: &ErrorCovariance,
    gamma: &[bool],
    model: &SystemModel,
) -> Result<(Matrix, Matrix, ErrorCovariance)> {
    let n = model.devices();
    if gamma.len() != n {
        return Err(Error::DimensionMismatch {
            context: "arrival mask",
            expected: n,
            found: gamma.len(),
        });
    }
    let h = predict_covariance(x, model).into_matrix();
    let g = Matrix::diag(
        &gamma
            .iter()
            .map(|&on| f64::from(u8::from(on)))
            .collect::<Vec<_>>(),
    );
    let c_masked = &g * model.c();
    let r_masked = &(&g * &model.r()) * &g.transpose();
    let gram = &(&(&c_masked * &h) * &c_masked.transpose()) + &r_masked;
    let gram_pinv = masked_pseudo_inverse(&gram, gamma)?;
    let gain = &(&h * &c_masked.transpose()) * &gram_pinv;
    let reduction = &Matrix::identity(model.state_dim()) - &(&gain * &c_masked);
    let p = (&reduction * &h).symmetrize();
    Ok((gain, c_masked, ErrorCovariance::from_recursion(p)))
}

/// The covariance transition `F(X, γ)`.
pub fn masked_update(
    x: &ErrorCovariance,
    gamma: &[bool],
    model: &SystemModel,
) -> Result<ErrorCovariance> {
    masked_gain(x, gamma, model).map(|(_, _, p)| p)
}

/// Iterates `X ← F(X, 1)` from `Π₀` until the max-abs change is at most `tol`.
pub fn steady_state_covariance(
    model: &SystemModel,
    tol: f64,
    max_iter: usize,
) -> Result<ErrorCovariance> {
    steady_state_from(
        model,
        ErrorCovariance::new(model.pi0().clone())?,
        tol,
        max_iter,
    )
    .map(|(p, _)| p)
}

/// Steady-state iteration from an arbitrary start; also returns the number
/// of sweeps taken.
pub fn steady_state_from(
    model: &SystemModel,
    start: ErrorCovariance,
    tol: f64,
    max_iter: usize,
) -> Result<(ErrorCovariance, usize)> {
    if !(tol > 0.0) {
        return Err(Error::Validation("tolerance must be positive".into()));
    }
    let all = vec![true; model.devices()];
    let mut x = start;
    for iter in 1..=max_iter {
        let next = masked_update(&x, &all, model)?;
        if !next.matrix().is_finite() {
            return Err(Error::NonFinite("steady-state iteration diverged".into()));
        }
        let delta = next.matrix().max_abs_diff(x.matrix());
        x = next;
        if delta <= tol {
            return Ok((x, iter));
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
    })
}

/// One remote-estimator slot: predict, then fuse the innovations that arrived.
///
/// Entries of `received` on lost channels are forced to zero.
pub fn kalman_step(
    state: &EstimatorState,
    received: &[f64],
    gamma: &[bool],
    model: &SystemModel,
) -> Result<EstimatorState> {
    if received.len() != model.devices() {
        return Err(Error::DimensionMismatch {
            context: "received innovations",
            expected: model.devices(),
            found: received.len(),
        });
    }
    let (gain, _, p) = masked_gain(&state.p, gamma, model)?;
    let z: Vec<f64> = received
        .iter()
        .zip(gamma)
        .map(|(&z, &on)| if on { z } else { 0.0 })
        .collect();
    let x_hat_pred = state.prediction(model);
    let x_hat = x_hat_pred
        .iter()
        .zip(gain.mul_vec(&z))
        .map(|(x, k)| x + k)
        .collect();
    Ok(EstimatorState {
        x_hat,
        x_hat_pred,
        p,
    })
}

/// Number of lossless slots until `trace(P)` is back within `tol` of `trace(P̄)`.
pub fn recovery_horizon(p0: &ErrorCovariance, model: &SystemModel, tol: f64) -> Result<usize> {
    let steady = steady_state_covariance(model, STEADY_STATE_TOLERANCE, STEADY_STATE_MAX_ITER)?;
    recovery_horizon_to(p0, &steady, model, tol)
}

pub fn recovery_horizon_to(
    p0: &ErrorCovariance,
    steady: &ErrorCovariance,
    model: &SystemModel,
    tol: f64,
) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::Validation("tolerance must be positive".into()));
    }
    let all = vec![true; model.devices()];
    let target = steady.trace();
    let mut x = p0.clone();
    for k in 0..=RECOVERY_SEARCH_LIMIT {
        if (x.trace() - target).abs() <= tol {
            return Ok(k);
        }
        x = masked_update(&x, &all, model)?;
    }
    Err(Error::NoConvergence {
        iterations: RECOVERY_SEARCH_LIMIT,
    })
}
