//! User-level mean-field game.
//!
//! A user compares the privacy pressure `P(σ_L)` with the abstain value
//! `AC(σ_L, σ̄_S^{-i})` and responds at a corner of `[0, M]`. Symmetric
//! equilibria are the fixed points of that response, and `Γ(σ_L)` picks one
//! of them for every promise of the learner.

mod cascade;

pub use cascade::{cascade_simulate, CascadeError, CascadeTrace, Schedule};

use serde::{Deserialize, Serialize};

use crate::model::{GameParams, NoiseProfile};

/// Absolute band on `P - AC` inside which a user is reported indifferent.
pub const INDIFFERENCE_TOLERANCE: f64 = 1e-9;

/// Utilities within this distance of the maximum count as ties in the oracle.
pub const ORACLE_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResponseKind {
    Zero,
    Max,
    Indifferent,
}

/// Best-response set: `{0}`, `{M}`, or the whole interval `[0, M]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub kind: ResponseKind,
    pub lower: f64,
    pub upper: f64,
}

impl BestResponse {
    fn new(kind: ResponseKind, m: f64) -> Self {
        let (lower, upper) = match kind {
            ResponseKind::Zero => (0.0, 0.0),
            ResponseKind::Max => (m, m),
            ResponseKind::Indifferent => (0.0, m),
        };
        Self { kind, lower, upper }
    }

    pub fn contains(&self, sigma: f64) -> bool {
        (self.lower..=self.upper).contains(&sigma)
    }
}

/// `BR_S(σ̄_S^{-i} | σ_L)` in closed form.
pub fn best_response(params: &GameParams, sigma_l: f64, sigma_bar_other: f64) -> BestResponse {
    let margin = params.privacy_pressure(sigma_l) - params.abstain_value(sigma_l, sigma_bar_other);
    let kind = if margin < -INDIFFERENCE_TOLERANCE {
        ResponseKind::Zero
    } else if margin > INDIFFERENCE_TOLERANCE {
        ResponseKind::Max
    } else {
        ResponseKind::Indifferent
    };
    BestResponse::new(kind, params.m)
}

/// Grid maximisers of the exact user utility.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResponse {
    pub maximizers: Vec<f64>,
    pub best_utility: f64,
}

impl OracleResponse {
    /// Whether the brute-force answer matches a closed-form response:
    /// `Zero` needs the maximiser set to be exactly `{0}`, `Max` needs `M`
    /// in the set and `0` outside it.
    pub fn agrees_with(&self, response: &BestResponse, m: f64) -> bool {
        let has_zero = self.maximizers.contains(&0.0);
        match response.kind {
            ResponseKind::Zero => has_zero && self.maximizers.len() == 1,
            ResponseKind::Max => !has_zero && self.maximizers.contains(&m),
            ResponseKind::Indifferent => true,
        }
    }
}

/// Brute-force argmax of `U_S^i` over `{0} ∪ {kM/grid_size : k = 1..=grid_size}`.
pub fn best_response_oracle(
    params: &GameParams,
    sigma_l: f64,
    sigma_bar_other: f64,
    grid_size: usize,
) -> OracleResponse {
    assert!(grid_size >= 2, "oracle grid needs at least two points");
    let m = params.m;
    let candidates: Vec<(f64, f64)> = std::iter::once(0.0)
        .chain((1..=grid_size).map(|k| {
            if k == grid_size {
                m
            } else {
                m * k as f64 / grid_size as f64
            }
        }))
        .map(|s| {
            let u = params.user_utility(&NoiseProfile::new(sigma_l, sigma_bar_other, s));
            (s, u)
        })
        .collect();
    let best_utility = candidates
        .iter()
        .map(|&(_, u)| u)
        .fold(f64::NEG_INFINITY, f64::max);
    let maximizers = candidates
        .into_iter()
        .filter(|&(_, u)| best_utility - u <= ORACLE_TIE_TOLERANCE)
        .map(|(s, _)| s)
        .collect();
    OracleResponse {
        maximizers,
        best_utility,
    }
}

/// How far the corner comparison can be trusted at one evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerDiagnostic {
    /// `P(σ_L) - AC(σ_L, σ̄_S^{-i})`.
    pub margin: f64,
    /// Accuracy the user still has at stake, `A_S exp{-ε_g(σ_L, σ̄, 0)}`.
    /// Obfuscating at an interior level can recover up to this much.
    pub accuracy_at_stake: f64,
    /// Privacy loss left after obfuscating at `M`.
    pub residual_leakage: f64,
    pub reliable: bool,
}

/// The corner comparison treats the value of obfuscating as exactly `-C_S`.
/// The true value lies within `[-C_S - residual_leakage, -C_S + accuracy_at_stake]`,
/// so the comparison is certain once the margin clears that band.
pub fn corner_diagnostic(
    params: &GameParams,
    sigma_l: f64,
    sigma_bar_other: f64,
) -> CornerDiagnostic {
    let margin = params.privacy_pressure(sigma_l) - params.abstain_value(sigma_l, sigma_bar_other);
    let accuracy_at_stake = params.abstain_value(sigma_l, sigma_bar_other) - params.c_s;
    let residual_leakage = params.p_s * params.privacy_level(sigma_l, params.m).leakage();
    let bound = accuracy_at_stake + residual_leakage;
    let reliable = if margin < -INDIFFERENCE_TOLERANCE {
        -margin > bound
    } else if margin > INDIFFERENCE_TOLERANCE {
        margin > bound && accuracy_at_stake <= ORACLE_TIE_TOLERANCE
    } else {
        false
    };
    CornerDiagnostic {
        margin,
        accuracy_at_stake,
        residual_leakage,
        reliable,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MfgRegime {
    NoObfuscation,
    Bistable,
    FullObfuscation,
}

/// Symmetric equilibria of the user game for one promise `σ_L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfgEquilibria {
    pub equilibria: Vec<f64>,
    pub selected: f64,
    pub regime: MfgRegime,
}

pub fn mfg_equilibria(params: &GameParams, sigma_l: f64) -> MfgEquilibria {
    let pressure = params.privacy_pressure(sigma_l);
    let ac_full = params.abstain_value(sigma_l, params.m);
    let ac_none = params.abstain_value(sigma_l, 0.0);
    let (regime, equilibria) = if pressure < ac_full {
        (MfgRegime::NoObfuscation, vec![0.0])
    } else if pressure <= ac_none {
        (MfgRegime::Bistable, vec![0.0, params.m])
    } else {
        (MfgRegime::FullObfuscation, vec![params.m])
    };
    MfgEquilibria {
        equilibria,
        selected: gamma(params, sigma_l),
        regime,
    }
}

/// Induced response `Γ(σ_L) = M·1{P(σ_L) > AC(σ_L, 0)}`; in the bistable
/// band the no-obfuscation equilibrium is selected.
pub fn gamma(params: &GameParams, sigma_l: f64) -> f64 {
    if params.privacy_pressure(sigma_l) > params.abstain_value(sigma_l, 0.0) {
        params.m
    } else {
        0.0
    }
}

/// Whether `σ̄ ∈ BR_S(σ̄ | σ_L)`.
pub fn fixed_point_check(params: &GameParams, sigma_l: f64, sigma_bar: f64) -> bool {
    best_response(params, sigma_l, sigma_bar).contains(sigma_bar)
}

/// Closed-form responses at `n_points` evenly spaced values of `σ̄_S^{-i}` on `[0, M]`.
pub fn br_curve(params: &GameParams, sigma_l: f64, n_points: usize) -> Vec<(f64, BestResponse)> {
    assert!(n_points >= 2, "a response curve needs at least two samples");
    let last = (n_points - 1) as f64;
    (0..n_points)
        .map(|k| {
            let sigma_bar = if k + 1 == n_points {
                params.m
            } else {
                params.m * k as f64 / last
            };
            (sigma_bar, best_response(params, sigma_l, sigma_bar))
        })
        .collect()
}
