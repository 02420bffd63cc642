use mfsg_core::dp::{gaussian_epsilon, scaling_check, DpSpec};
use mfsg_core::erm::{
    erm_fit, excess_risk_on, generate_synthetic, perturb_dataset, Classifier, ErmConfig,
    PerturbationSpec,
};
use mfsg_core::mfg::{
    best_response, br_curve, cascade_simulate, fixed_point_check, gamma, mfg_equilibria,
    ResponseKind, Schedule,
};
use mfsg_core::stackelberg::{
    classify_regime, pbne_solve, sg_equilibrium, tau_exact, tau_hat, threshold_crossings, Regime,
};
use mfsg_core::{GameParams, NoiseProfile};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn game() -> impl Strategy<Value = GameParams> {
    (
        0.5f64..5.0,
        0.05f64..0.95,
        0.1f64..3.0,
        0.1f64..3.0,
        0.5f64..8.0,
        0.3f64..3.0,
        1usize..2000,
        1f64..200.0,
    )
        .prop_map(|(a_l, c_frac, a_s, c_s, p_s, rho, n, m)| {
            GameParams::new(a_l, a_l * c_frac, a_s, p_s, c_s, rho, n, m)
        })
}

/// Games with `κM² ≥ 20` and room above `τ̂`, where full obfuscation
/// wipes out the learner's accuracy.
fn large_m_game() -> impl Strategy<Value = GameParams> {
    (game(), 1f64..3.0).prop_map(|(mut p, scale)| {
        let floor = (20.0 / p.kappa())
            .sqrt()
            .max(2.0 * tau_hat(&p).unwrap_or(0.0));
        p.m = floor * scale;
        p
    })
}

/// Games where users would obfuscate without a promise.
fn promise_game() -> impl Strategy<Value = GameParams> {
    (game(), 0.1f64..5.0).prop_map(|(mut p, excess)| {
        p.p_s = p.c_s + p.a_s + excess;
        p.m = p.m.max(4.0 * tau_hat(&p).unwrap());
        p
    })
}

// Independent re-derivation of the utilities from the primitive formulas.
fn user_utility_oracle(p: &GameParams, s_l: f64, s_bar: f64, s_s: f64) -> f64 {
    let n = p.n as f64;
    let kappa = 1.0 / (p.rho * p.rho * n);
    let eps_g = kappa * (s_l * s_l + (n - 1.0) / n * s_bar * s_bar + s_s * s_s / n);
    let combined = s_l * s_l + s_s * s_s;
    let leak = if combined == 0.0 {
        1.0
    } else {
        1.0 - (-1.0 / combined).exp()
    };
    p.a_s * (-eps_g).exp() - p.p_s * leak - if s_s > 0.0 { p.c_s } else { 0.0 }
}

fn learner_utility_oracle(p: &GameParams, s_l: f64, s_bar: f64) -> f64 {
    let kappa = 1.0 / (p.rho * p.rho * p.n as f64);
    p.a_l * (-kappa * (s_l * s_l + s_bar * s_bar)).exp() - if s_l > 0.0 { p.c_l } else { 0.0 }
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn accuracy_level_monotone(p in game(), a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0, bump in 0.01f64..1.0) {
        let (a, b, c) = (a * p.m, b * p.m, c * p.m);
        let base = p.accuracy_level(&NoiseProfile::new(a, b, c));
        prop_assert!(p.accuracy_level(&NoiseProfile::new(a + bump, b, c)) > base);
        if p.n > 1 {
            prop_assert!(p.accuracy_level(&NoiseProfile::new(a, b + bump, c)) > base);
        }
        prop_assert!(p.accuracy_level(&NoiseProfile::new(a, b, c + bump)) > base);
        prop_assert!(base >= 0.0);
    }

    #[test]
    fn privacy_level_decreasing(p in game(), a in 0.01f64..10.0, b in 0.0f64..10.0, bump in 0.01f64..1.0) {
        let base = p.privacy_level(a, b).value();
        prop_assert!(p.privacy_level(a + bump, b).value() < base);
        prop_assert!(p.privacy_level(a, b + bump).value() < base);
        prop_assert!(p.privacy_level(0.0, 0.0).is_unbounded());
        prop_assert_eq!(p.privacy_level(0.0, 0.0).retained(), 0.0);
    }

    #[test]
    fn pressure_and_abstain_value_shapes(p in game(), s in 0.0f64..1.0, bump in 0.01f64..1.0) {
        let s = s * p.m;
        prop_assert_eq!(p.privacy_pressure(0.0), p.p_s);
        prop_assert!(p.privacy_pressure(s + bump) <= p.privacy_pressure(s));
        prop_assert!(p.privacy_pressure(s) >= 0.0);
        prop_assert!((p.abstain_value(0.0, 0.0) - (p.a_s + p.c_s)).abs() <= 1e-12);
        if p.n > 1 {
            prop_assert!(p.abstain_value(s, s + bump) <= p.abstain_value(s, s));
        }
        prop_assert!(p.abstain_value(s, s) >= p.c_s);
    }

    #[test]
    fn utilities_match_primitives(p in game(), a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
        let (a, b, c) = (a * p.m, b * p.m, c * p.m);
        let got = p.user_utility(&NoiseProfile::new(a, b, c));
        prop_assert!((got - user_utility_oracle(&p, a, b, c)).abs() <= 1e-12);
        let got = p.learner_utility(a, b);
        prop_assert!((got - learner_utility_oracle(&p, a, b)).abs() <= 1e-12);
    }

    #[test]
    fn best_response_switches_at_most_once(p in game(), s in 0.0f64..1.0) {
        let curve = br_curve(&p, s * p.m, 200);
        let kinds: Vec<ResponseKind> = curve.iter().map(|(_, br)| br.kind).collect();
        // once a user obfuscates, more obfuscation by others never reverses it
        if let Some(first_max) = kinds.iter().position(|&k| k == ResponseKind::Max) {
            prop_assert!(kinds[first_max..].iter().all(|&k| k == ResponseKind::Max));
        }
        if let Some(last_zero) = kinds.iter().rposition(|&k| k == ResponseKind::Zero) {
            prop_assert!(kinds[..=last_zero].iter().all(|&k| k == ResponseKind::Zero));
        }
    }

    #[test]
    fn equilibria_are_fixed_points(p in game(), s in 0.0f64..1.0) {
        let sigma_l = s * p.m;
        let eq = mfg_equilibria(&p, sigma_l);
        prop_assert!(eq.equilibria.contains(&eq.selected));
        prop_assert_eq!(eq.selected, gamma(&p, sigma_l));
        for &v in &eq.equilibria {
            prop_assert!(fixed_point_check(&p, sigma_l, v));
        }
        for v in [0.0, p.m] {
            if !eq.equilibria.contains(&v) {
                prop_assert!(!fixed_point_check(&p, sigma_l, v));
            }
        }
    }

    #[test]
    fn exact_threshold_precedes_approximation(p in promise_game()) {
        let tau = tau_exact(&p).unwrap();
        let hat = tau_hat(&p).unwrap();
        prop_assert!(tau < hat, "{} vs {}", tau, hat);
        // the gap is positive at 0 and non-positive from τ̂ on, so it crosses an odd number of times
        let crossings = threshold_crossings(&p);
        prop_assert_eq!(crossings.len() % 2, 1);
        prop_assert_eq!(crossings[0], tau);
        prop_assert!(crossings.iter().all(|&c| c < hat));
        prop_assert_eq!(gamma(&p, 0.999 * tau), p.m);
        prop_assert_eq!(gamma(&p, hat), 0.0);
    }

    #[test]
    fn promise_iff_deterrence_cost_covered(p in promise_game()) {
        let hat = tau_hat(&p).unwrap();
        let promise = sg_equilibrium(&p).unwrap();
        let kappa_tau2 = p.kappa() * hat * hat;
        let log_ratio = (p.a_l / p.c_l).ln();
        if (kappa_tau2 - log_ratio).abs() > 1e-9 {
            prop_assert_eq!(promise.sigma_l == hat, kappa_tau2 < log_ratio);
            prop_assert_eq!(promise.sigma_l == 0.0, kappa_tau2 > log_ratio);
        }
    }

    #[test]
    fn table_lookup_matches_solver(p in large_m_game()) {
        let table = classify_regime(&p);
        prop_assume!(table.regime != Regime::Boundary);
        let solved = pbne_solve(&p).unwrap();
        prop_assert_eq!(solved.regime, table.regime);
        prop_assert_eq!(solved.sigma_l_dagger, table.sigma_l_dagger);
        prop_assert_eq!(solved.sigma_bar_dagger, table.sigma_bar_dagger);
    }

    #[test]
    fn cascade_never_leaves_absorbing_states(p in game(), s in 0.0f64..1.0, seed in any::<u64>()) {
        let p = GameParams { n: p.n.min(300), ..p };
        let sigma_l = s * p.m;
        for (fraction, sigma_bar) in [(0.0, 0.0), (1.0, p.m)] {
            if fixed_point_check(&p, sigma_l, sigma_bar) && best_response(&p, sigma_l, sigma_bar).kind != ResponseKind::Indifferent {
                let trace = cascade_simulate(&p, sigma_l, fraction, Schedule::Asynchronous, seed, 5).unwrap();
                prop_assert!(trace.converged);
                prop_assert!(trace.adoption_fraction.iter().all(|&f| f == fraction));
            }
        }
    }

    #[test]
    fn gaussian_epsilon_scaling(std in 1e-3f64..1e3, delta in 1e-9f64..0.5, sensitivity in 0.01f64..10.0) {
        let spec = DpSpec::new(delta, sensitivity).unwrap();
        let eps = gaussian_epsilon(&spec, std).unwrap();
        let constant = sensitivity * (2.0 * (1.25 / delta).ln()).sqrt();
        prop_assert!((eps.epsilon * std - constant).abs() <= 1e-12 * constant);
        prop_assert_eq!(eps.valid, eps.epsilon < 1.0);
        let doubled = gaussian_epsilon(&spec, 2.0 * std).unwrap();
        prop_assert!((2.0 * doubled.epsilon - eps.epsilon).abs() <= 1e-12 * eps.epsilon);
    }

    #[test]
    fn dp_depends_on_combined_std_only(a in 0.01f64..10.0, b in 0.01f64..10.0) {
        let report = scaling_check(&DpSpec::default(), &[(a, b), (b, a), (a.hypot(b), 0.0)]).unwrap();
        prop_assert!(report.max_deviation <= 1e-12);
        prop_assert!((report.rows[0].epsilon - report.rows[2].epsilon).abs() <= 1e-12 * report.rows[0].epsilon);
    }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn excess_risk_identity_and_permutation(weights in prop::collection::vec(-3.0f64..3.0, 3), other in prop::collection::vec(-3.0f64..3.0, 3), seed in any::<u64>()) {
        let eval = generate_synthetic(1000, 3, 1.0, seed);
        let config = ErmConfig::default();
        let f = Classifier { weights };
        let g = Classifier { weights: other };
        prop_assert_eq!(excess_risk_on(&f, &f, &config, &eval).estimate, 0.0);
        let order: Vec<usize> = (0..eval.len()).map(|i| (i * 7 + 3) % eval.len()).collect();
        let a = excess_risk_on(&f, &g, &config, &eval).estimate;
        let b = excess_risk_on(&f, &g, &config, &eval.permuted(&order)).estimate;
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn objective_never_increases(rho in 1e-3f64..10.0, separation in 0.0f64..3.0, seed in any::<u64>()) {
        let data = generate_synthetic(300, 4, separation, seed);
        let config = ErmConfig { rho, ..Default::default() };
        let fit = erm_fit(&data, &config).unwrap();
        prop_assert!(fit.converged);
        prop_assert!(fit.objective_history.windows(2).all(|w| w[1] <= w[0]));
        let last = *fit.objective_history.last().unwrap();
        prop_assert!((config.objective(&fit.classifier.weights, &data) - last).abs() <= 1e-9);
    }
}

fn moments(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let kurt = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n / (var * var);
    (mean, var, kurt)
}

#[test]
fn noise_composition_matches_single_draw() {
    let n = 10_000;
    let data = generate_synthetic(n, 1, 1.0, 1);
    let (sigma_l, sigma_s) = (0.7f64, 1.3f64);
    let once = perturb_dataset(
        &data,
        &PerturbationSpec {
            sigma_l: sigma_l.hypot(sigma_s),
            sigma_s_per_user: vec![0.0; n],
            rng_seed: 2,
        },
    )
    .unwrap();
    let users = perturb_dataset(
        &data,
        &PerturbationSpec {
            sigma_l: 0.0,
            sigma_s_per_user: vec![sigma_s; n],
            rng_seed: 3,
        },
    )
    .unwrap();
    let twice = perturb_dataset(
        &users,
        &PerturbationSpec {
            sigma_l,
            sigma_s_per_user: vec![0.0; n],
            rng_seed: 4,
        },
    )
    .unwrap();
    let diff = |d: &mfsg_core::erm::Dataset| -> Vec<f64> {
        d.features()
            .iter()
            .zip(data.features())
            .map(|(a, b)| a - b)
            .collect()
    };
    let (m1, v1, k1) = moments(&diff(&once));
    let (m2, v2, k2) = moments(&diff(&twice));
    let target = sigma_l * sigma_l + sigma_s * sigma_s;
    // standard errors at n = 10⁴: mean ≈ 0.015, variance ≈ 3%, kurtosis ≈ 0.05
    assert!(m1.abs() < 0.06 && m2.abs() < 0.06, "{m1} {m2}");
    assert!(
        (v1 / target - 1.0).abs() < 0.05 && (v2 / target - 1.0).abs() < 0.05,
        "{v1} {v2}"
    );
    assert!((v1 / v2 - 1.0).abs() < 0.06);
    assert!(
        (k1 - 3.0).abs() < 0.2 && (k2 - 3.0).abs() < 0.2,
        "{k1} {k2}"
    );
    assert_eq!(once.labels(), twice.labels());
}
