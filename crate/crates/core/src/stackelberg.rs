//! Learner-level Stackelberg game.
//!
//! The learner commits to a perturbation `σ_L`, anticipating the induced
//! user response `Γ(σ_L)`. Outside the status quo the only candidate
//! promises are `0` and the deterrence threshold `τ̂`, and a single
//! inequality between `κ` and `ln(A_L/C_L)·ln(P_S/(P_S−C_S))` picks one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mfg::{fixed_point_check, gamma};
use crate::model::{GameParams, NoiseProfile};

/// Intervals in the bracketing scan for `τ`.
pub const ROOT_SCAN_INTERVALS: usize = 1_000;
/// Points in the grid scan that checks leader optimality.
pub const OPTIMALITY_GRID_POINTS: usize = 10_000;
/// Parameter points this close to a regime boundary are not classified.
pub const BOUNDARY_BAND: f64 = 1e-9;
/// Ties in the promise inequality resolve to no promise.
pub const PROMISE_TIE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThresholdError {
    #[error("P_S = {p_s} does not exceed C_S = {c_s}: users are never deterred")]
    NeverDeterred { p_s: f64, c_s: f64 },
    #[error("C_S = 0: obfuscation is free, the deterrence threshold is infinite")]
    FreeObfuscation,
    #[error("no crossing of P(σ) and AC(σ, 0) on (0, M]: {0}")]
    NoCrossing(Dominant),
}

/// Which side of `P(σ) - AC(σ, 0)` wins over the whole scanned range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dominant {
    /// `P(0) ≤ AC(0, 0)`: users abstain even without a promise.
    Abstain,
    /// Users still obfuscate at `σ_L = M`.
    Pressure,
}

impl std::fmt::Display for Dominant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Dominant::Abstain => f.write_str("abstain value dominates from the start"),
            Dominant::Pressure => f.write_str("privacy pressure dominates up to M"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StackelbergError {
    #[error("promise rule needs P_S - C_S > A_S (margin {margin}); use the status quo")]
    OutsidePromiseRegime { margin: f64 },
    #[error(
        "closed-form promise {closed_form_sigma} earns {closed_form_utility}, \
         grid scan finds {scanned_utility} at {scanned_sigma} (tolerance {tolerance})"
    )]
    Inconsistent {
        closed_form_sigma: f64,
        closed_form_utility: f64,
        scanned_sigma: f64,
        scanned_utility: f64,
        tolerance: f64,
    },
    #[error(
        "users at {sigma_bar} are not a fixed point of their best response under σ_L = {sigma_l}"
    )]
    NotFixedPoint { sigma_l: f64, sigma_bar: f64 },
}

/// `τ̂ = sqrt(1 / ln(P_S/(P_S−C_S)))`, the promise at which the privacy
/// pressure falls to the obfuscation cost.
pub fn tau_hat(params: &GameParams) -> Result<f64, ThresholdError> {
    if params.p_s <= params.c_s {
        return Err(ThresholdError::NeverDeterred {
            p_s: params.p_s,
            c_s: params.c_s,
        });
    }
    if params.c_s == 0.0 {
        return Err(ThresholdError::FreeObfuscation);
    }
    Ok((1.0 / log_pressure_ratio(params)).sqrt())
}

/// `ln(P_S/(P_S−C_S))`, computed without cancellation for small `C_S/P_S`.
fn log_pressure_ratio(params: &GameParams) -> f64 {
    -(-params.c_s / params.p_s).ln_1p()
}

fn deterrence_gap(params: &GameParams, sigma: f64) -> f64 {
    params.privacy_pressure(sigma) - params.abstain_value(sigma, 0.0)
}

fn bisect(params: &GameParams, mut lo: f64, mut hi: f64) -> f64 {
    let positive_at_lo = deterrence_gap(params, lo) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (deterrence_gap(params, mid) > 0.0) == positive_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if deterrence_gap(params, lo).abs() <= deterrence_gap(params, hi).abs() {
        lo
    } else {
        hi
    }
}

/// Every sign change of `P(σ) - AC(σ, 0)` found by a uniform bracketing scan
/// of `[0, M]`, each refined by bisection.
pub fn threshold_crossings(params: &GameParams) -> Vec<f64> {
    let m = params.m;
    let step = m / ROOT_SCAN_INTERVALS as f64;
    let mut crossings = Vec::new();
    let mut lo = 0.0;
    let mut gap_lo = deterrence_gap(params, lo);
    for k in 1..=ROOT_SCAN_INTERVALS {
        let hi = if k == ROOT_SCAN_INTERVALS {
            m
        } else {
            step * k as f64
        };
        let gap_hi = deterrence_gap(params, hi);
        if gap_hi == 0.0 {
            crossings.push(hi);
        } else if (gap_lo > 0.0 && gap_hi < 0.0) || (gap_lo < 0.0 && gap_hi > 0.0) {
            crossings.push(bisect(params, lo, hi));
        }
        lo = hi;
        gap_lo = gap_hi;
    }
    crossings
}

/// Smallest `τ ∈ (0, M]` with `P(τ) = AC(τ, 0)`.
pub fn tau_exact(params: &GameParams) -> Result<f64, ThresholdError> {
    if deterrence_gap(params, 0.0) <= 0.0 {
        return Err(ThresholdError::NoCrossing(Dominant::Abstain));
    }
    threshold_crossings(params)
        .first()
        .copied()
        .ok_or(ThresholdError::NoCrossing(Dominant::Pressure))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub tau_exact: Option<f64>,
    pub tau_hat: Option<f64>,
    pub kappa: f64,
    /// All crossings found. With a large `κ` the accuracy term can make the gap
    /// cross again inside `(τ, τ̂)`, where users obfuscate once more.
    pub crossings: Vec<f64>,
    pub diagnostics: Vec<String>,
}

pub fn thresholds(params: &GameParams) -> Thresholds {
    let mut diagnostics = Vec::new();
    let tau_exact = tau_exact(params)
        .map_err(|e| diagnostics.push(format!("tau_exact: {e}")))
        .ok();
    let tau_hat = tau_hat(params)
        .map_err(|e| diagnostics.push(format!("tau_hat: {e}")))
        .ok();
    let crossings = if tau_exact.is_some() {
        threshold_crossings(params)
    } else {
        Vec::new()
    };
    Thresholds {
        tau_exact,
        tau_hat,
        kappa: params.kappa(),
        crossings,
        diagnostics,
    }
}

/// Exact leader utility when users answer with `Γ(σ_L)`.
pub fn induced_leader_utility(params: &GameParams, sigma_l: f64) -> f64 {
    params.learner_utility(sigma_l, gamma(params, sigma_l))
}

/// `ln(A_L/C_L)·ln(P_S/(P_S−C_S))`, the value `κ` is compared against.
/// Absent when `P_S ≤ C_S`.
pub fn promise_threshold(params: &GameParams) -> Option<f64> {
    if params.p_s <= params.c_s {
        return None;
    }
    if params.c_s == 0.0 {
        return Some(0.0);
    }
    if params.c_l == 0.0 {
        return Some(f64::INFINITY);
    }
    Some((params.a_l / params.c_l).ln() * log_pressure_ratio(params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PromiseDiagnostic {
    /// `A_L ≤ C_L`: no promise can ever pay for itself.
    Unprofitable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Promise {
    pub sigma_l: f64,
    pub diagnostic: Option<PromiseDiagnostic>,
}

/// The learner's optimal promise when users would otherwise obfuscate:
/// `τ̂` if `κ < ln(A_L/C_L)·ln(P_S/(P_S−C_S))`, else `0`.
pub fn sg_equilibrium(params: &GameParams) -> Result<Promise, StackelbergError> {
    let margin = params.p_s - params.c_s - params.a_s;
    if margin <= 0.0 {
        return Err(StackelbergError::OutsidePromiseRegime { margin });
    }
    if params.a_l <= params.c_l {
        return Ok(Promise {
            sigma_l: 0.0,
            diagnostic: Some(PromiseDiagnostic::Unprofitable),
        });
    }
    let threshold = promise_threshold(params).expect("P_S > C_S + A_S > C_S");
    let sigma_l = if params.kappa() >= threshold - PROMISE_TIE {
        0.0
    } else {
        tau_hat(params).expect("a positive threshold implies C_S > 0")
    };
    Ok(Promise {
        sigma_l,
        diagnostic: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    StatusQuo,
    FullObfuscation,
    PrivacyPromise,
    Boundary,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::StatusQuo => "StatusQuo",
            Regime::FullObfuscation => "FullObfuscation",
            Regime::PrivacyPromise => "PrivacyPromise",
            Regime::Boundary => "Boundary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryKind {
    /// `P_S − C_S = A_S`.
    UserIndifference,
    /// `κ = ln(A_L/C_L)·ln(P_S/(P_S−C_S))`.
    PromiseIndifference,
}

/// Evaluated sides of the two regime inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conditions {
    /// `P_S − C_S − A_S`.
    pub user_margin: f64,
    pub kappa: f64,
    pub promise_threshold: Option<f64>,
}

impl Conditions {
    pub fn evaluate(params: &GameParams) -> Self {
        Self {
            user_margin: params.p_s - params.c_s - params.a_s,
            kappa: params.kappa(),
            promise_threshold: promise_threshold(params),
        }
    }

    pub fn boundary(&self) -> Option<BoundaryKind> {
        if self.user_margin.abs() <= BOUNDARY_BAND {
            return Some(BoundaryKind::UserIndifference);
        }
        if self.user_margin > 0.0 {
            if let Some(threshold) = self.promise_threshold {
                if (self.kappa - threshold).abs() <= BOUNDARY_BAND {
                    return Some(BoundaryKind::PromiseIndifference);
                }
            }
        }
        None
    }
}

/// Outcome of checking the promise against a dense scan of `[0, M]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalityCheck {
    pub closed_form_utility: f64,
    pub scanned_sigma: f64,
    pub scanned_utility: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub sigma_l_dagger: f64,
    pub sigma_bar_dagger: f64,
    pub regime: Regime,
    pub boundary: Option<BoundaryKind>,
    pub learner_utility_at_eq: f64,
    pub user_utility_at_eq: f64,
    pub thresholds: Thresholds,
    pub conditions: Conditions,
    pub promise_diagnostic: Option<PromiseDiagnostic>,
    pub optimality: Option<OptimalityCheck>,
}

impl EquilibriumReport {
    fn assemble(
        params: &GameParams,
        sigma_l: f64,
        sigma_bar: f64,
        regime: Regime,
        conditions: Conditions,
    ) -> Self {
        Self {
            sigma_l_dagger: sigma_l,
            sigma_bar_dagger: sigma_bar,
            regime,
            boundary: conditions.boundary(),
            learner_utility_at_eq: params.learner_utility(sigma_l, sigma_bar),
            user_utility_at_eq: params.user_utility(&NoiseProfile::symmetric(sigma_l, sigma_bar)),
            thresholds: thresholds(params),
            conditions,
            promise_diagnostic: None,
            optimality: None,
        }
    }
}

/// The status-quo equilibrium `(σ_L†, σ̄†) = (0, 0)`, present only when
/// `P_S − C_S < A_S`.
pub fn status_quo(params: &GameParams) -> Option<EquilibriumReport> {
    let conditions = Conditions::evaluate(params);
    (conditions.user_margin < 0.0)
        .then(|| EquilibriumReport::assemble(params, 0.0, 0.0, Regime::StatusQuo, conditions))
}

/// Table lookup of the equilibrium from the two regime inequalities alone.
pub fn classify_regime(params: &GameParams) -> EquilibriumReport {
    let conditions = Conditions::evaluate(params);
    let m = params.m;
    if let Some(kind) = conditions.boundary() {
        let sigma_bar = gamma(params, 0.0);
        let mut report =
            EquilibriumReport::assemble(params, 0.0, sigma_bar, Regime::Boundary, conditions);
        report.boundary = Some(kind);
        return report;
    }
    if conditions.user_margin < 0.0 {
        return EquilibriumReport::assemble(params, 0.0, 0.0, Regime::StatusQuo, conditions);
    }
    let threshold = conditions.promise_threshold.expect("P_S > C_S here");
    let mut report = if conditions.kappa > threshold {
        EquilibriumReport::assemble(params, 0.0, m, Regime::FullObfuscation, conditions)
    } else {
        let tau = tau_hat(params).expect("κ below the threshold needs C_S > 0");
        EquilibriumReport::assemble(params, tau, 0.0, Regime::PrivacyPromise, conditions)
    };
    if params.a_l <= params.c_l {
        report.promise_diagnostic = Some(PromiseDiagnostic::Unprofitable);
    }
    report
}

/// Largest gain the exact induced utility can show over the two-valued
/// approximation: the margin between the exact and approximate deterrence
/// thresholds, plus the residual accuracy left when all users obfuscate.
pub fn approximation_slack(params: &GameParams) -> f64 {
    let Ok(tau) = tau_exact(params) else {
        return 0.0;
    };
    let threshold_gap = match tau_hat(params) {
        Ok(tau_hat) => {
            (params.learner_utility(tau, 0.0) - params.learner_utility(tau_hat, 0.0)).max(0.0)
        }
        Err(_) => 0.0,
    };
    threshold_gap + params.learner_utility(0.0, params.m)
}

/// Maximum of the induced leader utility over `points` evenly spaced promises.
pub fn scan_induced_utility(params: &GameParams, points: usize) -> (f64, f64) {
    let last = (points - 1) as f64;
    (0..points)
        .map(|k| {
            let sigma = if k + 1 == points {
                params.m
            } else {
                params.m * k as f64 / last
            };
            (sigma, induced_leader_utility(params, sigma))
        })
        .fold((0.0, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        })
}

fn check_optimality(params: &GameParams, sigma_l: f64, sigma_bar: f64) -> OptimalityCheck {
    let closed_form_utility = induced_leader_utility(params, sigma_l);
    let (scanned_sigma, scanned_utility) = scan_induced_utility(params, OPTIMALITY_GRID_POINTS);
    let cell = params.m / (OPTIMALITY_GRID_POINTS - 1) as f64;
    let next = (sigma_l + cell).min(params.m);
    // variation of the smooth branch only; the flat cost is the same on both sides
    let cell_variation = (params.learner_utility(sigma_l, sigma_bar)
        - params.learner_utility(next, sigma_bar)
        - if sigma_l == 0.0 && next > 0.0 {
            params.c_l
        } else {
            0.0
        })
    .abs();
    let tolerance = 1e-6f64.max(cell_variation).max(approximation_slack(params));
    OptimalityCheck {
        closed_form_utility,
        scanned_sigma,
        scanned_utility,
        tolerance,
    }
}

/// Perfect Bayesian Nash equilibrium of the bi-level game, with the follower
/// fixed point and the leader optimality both verified.
pub fn pbne_solve(params: &GameParams) -> Result<EquilibriumReport, StackelbergError> {
    let conditions = Conditions::evaluate(params);
    let boundary = conditions.boundary();

    let (sigma_l, diagnostic) = if boundary.is_some() || conditions.user_margin < 0.0 {
        (0.0, None)
    } else {
        let promise = sg_equilibrium(params)?;
        (promise.sigma_l, promise.diagnostic)
    };
    let sigma_bar = gamma(params, sigma_l);

    if !fixed_point_check(params, sigma_l, sigma_bar) {
        return Err(StackelbergError::NotFixedPoint { sigma_l, sigma_bar });
    }

    let regime = match (boundary, sigma_l > 0.0, sigma_bar > 0.0) {
        (Some(_), _, _) => Regime::Boundary,
        (None, true, _) => Regime::PrivacyPromise,
        (None, false, true) => Regime::FullObfuscation,
        (None, false, false) => Regime::StatusQuo,
    };

    let check = check_optimality(params, sigma_l, sigma_bar);
    if check.scanned_utility - check.closed_form_utility > check.tolerance {
        return Err(StackelbergError::Inconsistent {
            closed_form_sigma: sigma_l,
            closed_form_utility: check.closed_form_utility,
            scanned_sigma: check.scanned_sigma,
            scanned_utility: check.scanned_utility,
            tolerance: check.tolerance,
        });
    }

    let mut report = EquilibriumReport::assemble(params, sigma_l, sigma_bar, regime, conditions);
    report.promise_diagnostic = diagnostic;
    report.optimality = Some(check);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelConventions, PrivacyExponent};

    fn row3() -> GameParams {
        GameParams::new(2.0, 1.0, 0.5, 2.0, 1.0, 1.0, 100, 100.0)
    }

    fn row2() -> GameParams {
        GameParams::new(2.0, 1.0, 0.5, 2.0, 1.0, 1.0, 1, 100.0)
    }

    fn row1() -> GameParams {
        GameParams::new(2.0, 1.0, 1.0, 1.5, 1.0, 1.0, 100, 100.0)
    }

    #[test]
    fn tau_hat_examples() {
        let mut p = row3();
        assert!((tau_hat(&p).unwrap() - (1.0 / 2f64.ln()).sqrt()).abs() < 1e-15);
        assert!((tau_hat(&p).unwrap() - 1.2011).abs() < 1e-4);
        p.p_s = 10.0;
        assert!((tau_hat(&p).unwrap() - (1.0 / (10f64 / 9.0).ln()).sqrt()).abs() < 1e-14);
        p.c_s = 9.999_999;
        assert!(tau_hat(&p).unwrap() < 0.3);
        p.c_s = 10.0;
        assert!(matches!(
            tau_hat(&p),
            Err(ThresholdError::NeverDeterred { .. })
        ));
        p.c_s = 0.0;
        assert_eq!(tau_hat(&p), Err(ThresholdError::FreeObfuscation));
    }

    #[test]
    fn tau_exact_example() {
        let p = GameParams::new(2.0, 1.0, 1.0, 3.0, 1.0, 1.0, 100, 100.0);
        let tau = tau_exact(&p).unwrap();
        // independent bisection on 3(1 - e^{-1/σ²}) - e^{-0.01σ²} - 1
        let f = |s: f64| 3.0 * (1.0 - (-1.0 / (s * s)).exp()) - (-0.01 * s * s).exp() - 1.0;
        let (mut lo, mut hi) = (0.5, 1.5);
        assert!(f(lo) > 0.0 && f(hi) < 0.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!((tau - lo).abs() < 1e-10, "{tau} vs {lo}");
        assert!(deterrence_gap(&p, tau).abs() <= 1e-9);
        assert!(tau < tau_hat(&p).unwrap());
        assert!((tau_hat(&p).unwrap() - 1.570_45).abs() < 1e-5);
    }

    #[test]
    fn tau_exact_errors() {
        assert_eq!(
            tau_exact(&row1()),
            Err(ThresholdError::NoCrossing(Dominant::Abstain))
        );
        // M far below the crossing
        let mut p = row3();
        p.m = 0.1;
        assert_eq!(
            tau_exact(&p),
            Err(ThresholdError::NoCrossing(Dominant::Pressure))
        );
    }

    #[test]
    fn induced_utility_pieces() {
        let p = GameParams::new(2.0, 1.0, 0.5, 2.0, 1.0, 1.0, 100, 100.0);
        let tau = tau_exact(&p).unwrap();
        let tau_hat = tau_hat(&p).unwrap();
        assert!(induced_leader_utility(&p, 0.0).abs() < 1e-40);
        let below = induced_leader_utility(&p, 0.5 * tau);
        assert!((below + 1.0).abs() < 1e-40);
        let above = induced_leader_utility(&p, tau_hat);
        assert!((above - (2.0 * (-0.01 * tau_hat * tau_hat).exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn sg_equilibrium_examples() {
        let promise = sg_equilibrium(&row3()).unwrap();
        assert!((promise.sigma_l - 1.2011).abs() < 1e-4);
        assert_eq!(sg_equilibrium(&row2()).unwrap().sigma_l, 0.0);

        let mut p = row3();
        p.c_l = p.a_l;
        let promise = sg_equilibrium(&p).unwrap();
        assert_eq!(promise.sigma_l, 0.0);
        assert_eq!(promise.diagnostic, Some(PromiseDiagnostic::Unprofitable));

        assert!(matches!(
            sg_equilibrium(&row1()),
            Err(StackelbergError::OutsidePromiseRegime { .. })
        ));
    }

    #[test]
    fn status_quo_examples() {
        let report = status_quo(&row1()).unwrap();
        assert_eq!(report.regime, Regime::StatusQuo);
        assert_eq!(report.learner_utility_at_eq, row1().a_l);
        assert!(status_quo(&GameParams::new(2.0, 1.0, 1.0, 3.0, 1.0, 1.0, 100, 100.0)).is_none());

        let edge = GameParams::new(2.0, 1.0, 1.0, 2.0, 1.0, 1.0, 100, 100.0);
        assert!(status_quo(&edge).is_none());
        assert_eq!(
            Conditions::evaluate(&edge).boundary(),
            Some(BoundaryKind::UserIndifference)
        );
    }

    #[test]
    fn classify_rows() {
        let r = classify_regime(&row1());
        assert_eq!(
            (r.regime, r.sigma_bar_dagger, r.sigma_l_dagger),
            (Regime::StatusQuo, 0.0, 0.0)
        );
        let r = classify_regime(&row2());
        assert_eq!(
            (r.regime, r.sigma_bar_dagger, r.sigma_l_dagger),
            (Regime::FullObfuscation, 100.0, 0.0)
        );
        let r = classify_regime(&row3());
        assert_eq!(r.regime, Regime::PrivacyPromise);
        assert_eq!(r.sigma_bar_dagger, 0.0);
        assert_eq!(r.sigma_l_dagger, tau_hat(&row3()).unwrap());
    }

    #[test]
    fn pbne_examples() {
        let r = pbne_solve(&row1()).unwrap();
        let sq = status_quo(&row1()).unwrap();
        assert_eq!(r.sigma_l_dagger, sq.sigma_l_dagger);
        assert_eq!(r.sigma_bar_dagger, sq.sigma_bar_dagger);
        assert_eq!(r.regime, sq.regime);

        let r = pbne_solve(&row3()).unwrap();
        assert_eq!(
            (r.regime, r.sigma_bar_dagger),
            (Regime::PrivacyPromise, 0.0)
        );
        assert_eq!(r.sigma_l_dagger, tau_hat(&row3()).unwrap());
        assert!(r.optimality.is_some());

        let r = pbne_solve(&row2()).unwrap();
        assert_eq!(
            (r.regime, r.sigma_l_dagger, r.sigma_bar_dagger),
            (Regime::FullObfuscation, 0.0, 100.0)
        );
        assert!(r.learner_utility_at_eq.abs() < 1e-12);
    }

    #[test]
    fn pbne_flags_convention_mismatch() {
        // Under the square-root exponent τ̂ no longer deters: the users keep
        // obfuscating at τ̂ while a larger promise would have worked.
        let p = GameParams::new(2.0, 0.2, 0.1, 3.0, 0.3, 1.0, 10_000, 1000.0).with_conventions(
            ModelConventions {
                privacy_exponent: PrivacyExponent::Half,
                ..Default::default()
            },
        );
        let tau_hat = tau_hat(&p).unwrap();
        assert_eq!(gamma(&p, tau_hat), p.m);
        assert!(matches!(
            pbne_solve(&p),
            Err(StackelbergError::Inconsistent { .. })
        ));
    }

    #[test]
    fn kappa_scale_invariance() {
        let p = row3();
        let mut q = p;
        q.rho = p.rho / 2f64.sqrt();
        q.n = 2 * p.n;
        assert!((p.kappa() - q.kappa()).abs() < 1e-15);
        assert_eq!(classify_regime(&p).regime, classify_regime(&q).regime);
        assert_eq!(sg_equilibrium(&p).unwrap(), sg_equilibrium(&q).unwrap());
    }
}
