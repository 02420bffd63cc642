//! Game constants and the closed-form accuracy, privacy and utility functions.
//!
//! Everything here is a pure function of [`GameParams`]. The accuracy level
//! `ε_g` grows linearly with the population-weighted noise variance, scaled by
//! `κ = 1/(ρ²N)`; the privacy level `ε_p` falls as a power of the combined
//! variance seen by one user. Both proportionality constants live in
//! [`ModelConventions`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{name} must be strictly positive (got {value})")]
    NotPositive { name: &'static str, value: f64 },
    #[error("{name} must be non-negative (got {value})")]
    Negative { name: &'static str, value: f64 },
    #[error("{name} must be finite (got {value})")]
    NotFinite { name: &'static str, value: f64 },
    #[error("user count N must be at least 1")]
    EmptyPopulation,
    #[error("{name} = {value} lies outside [0, M = {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        max: f64,
    },
}

/// Exponent applied to the combined variance in `ε_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum PrivacyExponent {
    /// `ε_p ∝ (σ_L² + σ_S²)^{-1}`; the convention under which `τ̂` is exact.
    #[default]
    One,
    /// `ε_p ∝ (σ_L² + σ_S²)^{-1/2}`, the Gaussian-mechanism scaling.
    Half,
}

impl PrivacyExponent {
    pub fn value(self) -> f64 {
        match self {
            PrivacyExponent::One => 1.0,
            PrivacyExponent::Half => 0.5,
        }
    }

    pub fn from_value(alpha: f64) -> Option<Self> {
        if alpha == 1.0 {
            Some(PrivacyExponent::One)
        } else if alpha == 0.5 {
            Some(PrivacyExponent::Half)
        } else {
            None
        }
    }
}

/// Proportionality constants that turn the order-of-magnitude scaling laws
/// into concrete functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConventions {
    pub c_g: f64,
    pub c_p: f64,
    pub privacy_exponent: PrivacyExponent,
}

impl Default for ModelConventions {
    fn default() -> Self {
        Self {
            c_g: 1.0,
            c_p: 1.0,
            privacy_exponent: PrivacyExponent::One,
        }
    }
}

/// Scalar constants of the bi-level game with symmetric users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    /// Learner's maximum accuracy benefit.
    #[serde(rename = "A_L")]
    pub a_l: f64,
    /// Learner's flat cost of perturbing.
    #[serde(rename = "C_L")]
    pub c_l: f64,
    /// Each user's maximum accuracy benefit.
    #[serde(rename = "A_S")]
    pub a_s: f64,
    /// Each user's maximum privacy loss.
    #[serde(rename = "P_S")]
    pub p_s: f64,
    /// Each user's flat cost of obfuscating.
    #[serde(rename = "C_S")]
    pub c_s: f64,
    pub rho: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Upper end of the perturbation range `[0, M]`.
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(default)]
    pub conventions: ModelConventions,
}

fn positive(name: &'static str, value: f64) -> Result<(), ParamError> {
    if !value.is_finite() {
        Err(ParamError::NotFinite { name, value })
    } else if value <= 0.0 {
        Err(ParamError::NotPositive { name, value })
    } else {
        Ok(())
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<(), ParamError> {
    if !value.is_finite() {
        Err(ParamError::NotFinite { name, value })
    } else if value < 0.0 {
        Err(ParamError::Negative { name, value })
    } else {
        Ok(())
    }
}

impl GameParams {
    /// Parameters with default conventions. Call [`GameParams::validate`]
    /// before handing user-supplied values to the solvers.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a_l: f64,
        c_l: f64,
        a_s: f64,
        p_s: f64,
        c_s: f64,
        rho: f64,
        n: usize,
        m: f64,
    ) -> Self {
        Self {
            a_l,
            c_l,
            a_s,
            p_s,
            c_s,
            rho,
            n,
            m,
            conventions: ModelConventions::default(),
        }
    }

    pub fn with_conventions(mut self, conventions: ModelConventions) -> Self {
        self.conventions = conventions;
        self
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        positive("A_L", self.a_l)?;
        non_negative("C_L", self.c_l)?;
        positive("A_S", self.a_s)?;
        positive("P_S", self.p_s)?;
        non_negative("C_S", self.c_s)?;
        positive("rho", self.rho)?;
        positive("M", self.m)?;
        positive("c_g", self.conventions.c_g)?;
        positive("c_p", self.conventions.c_p)?;
        if self.n == 0 {
            return Err(ParamError::EmptyPopulation);
        }
        Ok(())
    }

    /// Checks that a noise standard deviation lies in `[0, M]`.
    pub fn check_std(&self, name: &'static str, value: f64) -> Result<(), ParamError> {
        if !value.is_finite() {
            return Err(ParamError::NotFinite { name, value });
        }
        if !(0.0..=self.m).contains(&value) {
            return Err(ParamError::OutOfRange {
                name,
                value,
                max: self.m,
            });
        }
        Ok(())
    }

    pub fn check_noise(&self, noise: &NoiseProfile) -> Result<(), ParamError> {
        self.check_std("sigma_L", noise.sigma_l)?;
        self.check_std("sigma_bar_other", noise.sigma_bar_other)?;
        self.check_std("sigma_S", noise.sigma_s)
    }

    /// Accuracy-sensitivity scale `κ = 1/(ρ²N)`.
    pub fn kappa(&self) -> f64 {
        1.0 / (self.rho * self.rho * self.n as f64)
    }

    /// Population-weighted noise variance entering `ε_g`.
    pub fn weighted_variance(&self, noise: &NoiseProfile) -> f64 {
        aggregate_variance(self.n, noise)
    }

    /// Excess expected loss `ε_g` of the classifier trained on perturbed data.
    pub fn accuracy_level(&self, noise: &NoiseProfile) -> f64 {
        self.conventions.c_g * self.kappa() * self.weighted_variance(noise)
    }

    /// Differential-privacy level `ε_p` a user obtains from the combined
    /// learner and own noise. Unbounded when there is no noise at all.
    pub fn privacy_level(&self, sigma_l: f64, sigma_s: f64) -> PrivacyLevel {
        let combined = sigma_l * sigma_l + sigma_s * sigma_s;
        if combined == 0.0 {
            return PrivacyLevel::UNBOUNDED;
        }
        let scale = match self.conventions.privacy_exponent {
            PrivacyExponent::One => combined,
            PrivacyExponent::Half => combined.sqrt(),
        };
        PrivacyLevel(self.conventions.c_p / scale)
    }

    /// `U_S^i(σ_L, σ̄_S^{-i}, σ_S^i)`.
    pub fn user_utility(&self, noise: &NoiseProfile) -> f64 {
        let accuracy = self.a_s * (-self.accuracy_level(noise)).exp();
        let privacy_loss = self.p_s * self.privacy_level(noise.sigma_l, noise.sigma_s).leakage();
        let cost = if noise.sigma_s > 0.0 { self.c_s } else { 0.0 };
        accuracy - privacy_loss - cost
    }

    /// `U_L(σ_L, σ̄_S)` with every user perturbing at `sigma_bar`.
    pub fn learner_utility(&self, sigma_l: f64, sigma_bar: f64) -> f64 {
        let eps_g = self.accuracy_level(&NoiseProfile::symmetric(sigma_l, sigma_bar));
        let cost = if sigma_l > 0.0 { self.c_l } else { 0.0 };
        self.a_l * (-eps_g).exp() - cost
    }

    /// Privacy loss a user suffers without obfuscating, `P(σ_L)`.
    pub fn privacy_pressure(&self, sigma_l: f64) -> f64 {
        self.p_s * self.privacy_level(sigma_l, 0.0).leakage()
    }

    /// Accuracy a user keeps plus the cost saved by not obfuscating,
    /// `AC(σ_L, σ̄_S^{-i})`.
    pub fn abstain_value(&self, sigma_l: f64, sigma_bar_other: f64) -> f64 {
        let eps_g = self.accuracy_level(&NoiseProfile::new(sigma_l, sigma_bar_other, 0.0));
        self.a_s * (-eps_g).exp() + self.c_s
    }
}

/// `σ_L² + ((N−1)/N)(σ̄_S^{-i})² + (1/N)(σ_S^i)²`: the average per-record
/// noise variance when one user perturbs at `σ_S^i` and the rest at `σ̄_S^{-i}`.
pub fn aggregate_variance(n: usize, noise: &NoiseProfile) -> f64 {
    let n = n as f64;
    noise.sigma_l.powi(2)
        + (n - 1.0) / n * noise.sigma_bar_other.powi(2)
        + noise.sigma_s.powi(2) / n
}

/// The three noise coordinates at which a user's utility is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    pub sigma_l: f64,
    pub sigma_bar_other: f64,
    pub sigma_s: f64,
}

impl NoiseProfile {
    pub fn new(sigma_l: f64, sigma_bar_other: f64, sigma_s: f64) -> Self {
        Self {
            sigma_l,
            sigma_bar_other,
            sigma_s,
        }
    }

    /// Every user, including the focal one, perturbs with `sigma_s`.
    pub fn symmetric(sigma_l: f64, sigma_s: f64) -> Self {
        Self::new(sigma_l, sigma_s, sigma_s)
    }
}

/// A privacy level `ε_p`; `+∞` stands for unbounded leakage.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PrivacyLevel(pub f64);

impl PrivacyLevel {
    pub const UNBOUNDED: PrivacyLevel = PrivacyLevel(f64::INFINITY);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_unbounded(self) -> bool {
        self.0.is_infinite()
    }

    /// `exp{-ε_p}`, exactly zero for unbounded leakage.
    pub fn retained(self) -> f64 {
        if self.is_unbounded() {
            0.0
        } else {
            (-self.0).exp()
        }
    }

    /// `1 - exp{-ε_p}`, the fraction of the maximum privacy loss incurred.
    pub fn leakage(self) -> f64 {
        1.0 - self.retained()
    }

    /// Whether the level falls in the open unit interval where the
    /// Gaussian-mechanism calibration is valid. Reported, never enforced.
    pub fn within_unit_interval(self) -> bool {
        self.0 > 0.0 && self.0 < 1.0
    }
}
