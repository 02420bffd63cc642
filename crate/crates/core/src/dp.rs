//! Gaussian-mechanism privacy calibration.
//!
//! With per-record L2 sensitivity `Δ` and Gaussian noise of standard
//! deviation `σ`, the classical bound gives `(ε, δ)`-differential privacy for
//! `ε = Δ·sqrt(2 ln(1.25/δ)) / σ`, valid while `ε < 1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DpError {
    #[error("delta must lie in (0, 1) (got {0})")]
    Delta(f64),
    #[error("sensitivity must be strictly positive (got {0})")]
    Sensitivity(f64),
    #[error("zero total noise: leakage is unbounded")]
    InfiniteLeakage,
    #[error("noise standard deviation must be finite and non-negative (got {0})")]
    BadStd(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpSpec {
    pub delta: f64,
    pub sensitivity: f64,
}

impl Default for DpSpec {
    fn default() -> Self {
        Self {
            delta: 1e-5,
            sensitivity: 1.0,
        }
    }
}

impl DpSpec {
    pub fn new(delta: f64, sensitivity: f64) -> Result<Self, DpError> {
        let spec = Self { delta, sensitivity };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), DpError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(DpError::Delta(self.delta));
        }
        if !(self.sensitivity > 0.0 && self.sensitivity.is_finite()) {
            return Err(DpError::Sensitivity(self.sensitivity));
        }
        Ok(())
    }

    /// `Δ·sqrt(2 ln(1.25/δ))`, the invariant product `ε·σ`.
    pub fn calibration_constant(&self) -> f64 {
        self.sensitivity * (2.0 * (1.25 / self.delta).ln()).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianEpsilon {
    pub epsilon: f64,
    /// `ε < 1`, the range where the calibration bound holds.
    pub valid: bool,
}

pub fn gaussian_epsilon(spec: &DpSpec, total_std: f64) -> Result<GaussianEpsilon, DpError> {
    if !(total_std.is_finite() && total_std >= 0.0) {
        return Err(DpError::BadStd(total_std));
    }
    if total_std == 0.0 {
        return Err(DpError::InfiniteLeakage);
    }
    let epsilon = spec.calibration_constant() / total_std;
    Ok(GaussianEpsilon {
        epsilon,
        valid: epsilon < 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpRow {
    pub sigma_l: f64,
    pub sigma_s: f64,
    pub combined_std: f64,
    pub epsilon: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpScalingReport {
    pub rows: Vec<DpRow>,
    /// Expected value of `ε·sqrt(σ_L² + σ_S²)`.
    pub constant: f64,
    /// Largest relative deviation of any row's product from `constant`.
    pub max_deviation: f64,
}

/// Calibrates `ε` for the combined noise of each `(σ_L, σ_S)` pair and
/// measures how far `ε·sqrt(σ_L² + σ_S²)` strays from a constant.
pub fn scaling_check(
    spec: &DpSpec,
    sigma_pairs: &[(f64, f64)],
) -> Result<DpScalingReport, DpError> {
    spec.validate()?;
    let constant = spec.calibration_constant();
    let mut rows = Vec::with_capacity(sigma_pairs.len());
    let mut max_deviation: f64 = 0.0;
    for &(sigma_l, sigma_s) in sigma_pairs {
        let combined_std = sigma_l.hypot(sigma_s);
        let eps = gaussian_epsilon(spec, combined_std)?;
        max_deviation = max_deviation.max((eps.epsilon * combined_std - constant).abs() / constant);
        rows.push(DpRow {
            sigma_l,
            sigma_s,
            combined_std,
            epsilon: eps.epsilon,
            valid: eps.valid,
        });
    }
    Ok(DpScalingReport {
        rows,
        constant,
        max_deviation,
    })
}
