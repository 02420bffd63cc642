use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{erm_fit, excess_risk_on, perturb_dataset, reference_classifier};
use super::{ErmConfig, ErmError, GeneratorSpec, PerturbationSpec};
use crate::model::{aggregate_variance, NoiseProfile};
use crate::seed::derive_seed;

pub const MIN_LEVELS: usize = 4;
pub const MIN_REPLICATIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    /// Records per training set, one per user.
    pub n_users: usize,
    pub d: usize,
    pub separation: f64,
    pub erm: ErmConfig,
    pub n_ref: usize,
    pub n_eval: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            n_users: 500,
            d: 5,
            separation: 1.0,
            erm: ErmConfig::default(),
            n_ref: 100_000,
            n_eval: 100_000,
        }
    }
}

impl ScalingConfig {
    pub fn generator(&self) -> GeneratorSpec {
        GeneratorSpec {
            d: self.d,
            separation: self.separation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub noise: NoiseProfile,
    /// `σ_L² + ((N−1)/N)(σ̄^{-i})² + (1/N)(σ_S^i)²`
    pub v: f64,
    pub mean: f64,
    pub std_error: f64,
    pub replications: usize,
    pub unconverged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub levels: Vec<LevelResult>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Spearman correlation between `v` and the level means.
    pub rank_correlation: f64,
}

/// Measures mean excess risk at each noise level and regresses it on the
/// aggregate variance `v`.
///
/// User 0 adds `σ_S`, every other user adds `σ̄^{-i}`, and the learner adds
/// `σ_L` to all records. Replication `r` reuses the same clean training set at
/// every level, and all fits are scored on one shared evaluation set.
pub fn scaling_experiment(
    config: &ScalingConfig,
    noise_levels: &[NoiseProfile],
    replications: usize,
    rng_seed: u64,
) -> Result<ScalingReport, ErmError> {
    config.erm.validate()?;
    if config.n_users < 2 || config.d == 0 {
        return Err(ErmError::Config(format!(
            "need n_users >= 2 and d >= 1 (got {} and {})",
            config.n_users, config.d
        )));
    }
    let vs: Vec<f64> = noise_levels
        .iter()
        .map(|p| aggregate_variance(config.n_users, p))
        .collect();
    if let Some(&first) = vs.first() {
        if vs.iter().all(|&v| v == first) {
            return Err(ErmError::Degenerate(first));
        }
    }
    let mut distinct = vs.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < MIN_LEVELS {
        return Err(ErmError::TooFewLevels(distinct.len()));
    }
    if replications < MIN_REPLICATIONS {
        return Err(ErmError::TooFewReplications(replications));
    }

    let generator = config.generator();
    let f_star = reference_classifier(
        &generator,
        &config.erm,
        config.n_ref,
        derive_seed(rng_seed, 0),
    )?;
    let eval = generator.sample(config.n_eval.max(1000), derive_seed(rng_seed, 1));

    let tasks: Vec<(usize, usize)> = (0..noise_levels.len())
        .flat_map(|l| (0..replications).map(move |r| (l, r)))
        .collect();
    let outcomes: Vec<Result<(f64, bool), ErmError>> = tasks
        .par_iter()
        .map(|&(l, r)| {
            let noise = &noise_levels[l];
            let clean_seed = derive_seed(rng_seed, 2 + r as u64);
            let clean = generator.sample(config.n_users, clean_seed);
            let mut per_user = vec![noise.sigma_bar_other; config.n_users];
            per_user[0] = noise.sigma_s;
            let spec = PerturbationSpec {
                sigma_l: noise.sigma_l,
                sigma_s_per_user: per_user,
                rng_seed: derive_seed(clean_seed, 1 + l as u64),
            };
            let noisy = perturb_dataset(&clean, &spec)?;
            let fit = erm_fit(&noisy, &config.erm)?;
            Ok((
                excess_risk_on(&fit.classifier, &f_star, &config.erm, &eval).estimate,
                fit.converged,
            ))
        })
        .collect();

    let mut levels = Vec::with_capacity(noise_levels.len());
    for (l, chunk) in outcomes.chunks(replications).enumerate() {
        let mut values = Vec::with_capacity(replications);
        let mut unconverged = 0;
        for outcome in chunk {
            let (value, converged) = outcome.clone()?;
            values.push(value);
            unconverged += usize::from(!converged);
        }
        let (mean, sd) = mean_and_sd(&values);
        levels.push(LevelResult {
            noise: noise_levels[l],
            v: vs[l],
            mean,
            std_error: sd / (replications as f64).sqrt(),
            replications,
            unconverged,
        });
    }

    let means: Vec<f64> = levels.iter().map(|l| l.mean).collect();
    let (slope, intercept, r_squared) = least_squares(&vs, &means);
    Ok(ScalingReport {
        levels,
        slope,
        intercept,
        r_squared,
        rank_correlation: spearman(&vs, &means),
    })
}

fn mean_and_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Ordinary least squares `y ≈ slope·x + intercept` with its `R²`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, intercept, r_squared)
}

/// Ranks starting at 1, ties sharing their average rank.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (slope, _, r_squared) = least_squares(&ranks(x), &ranks(y));
    r_squared.sqrt().copysign(slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn levels(vs: &[f64]) -> Vec<NoiseProfile> {
        vs.iter()
            .map(|v| NoiseProfile::new(v.sqrt(), 0.0, 0.0))
            .collect()
    }

    #[test]
    fn regression_helpers() {
        let (slope, intercept, r2) = least_squares(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0]);
        assert!(
            (slope - 2.0).abs() < 1e-12
                && (intercept - 1.0).abs() < 1e-12
                && (r2 - 1.0).abs() < 1e-12
        );
        assert_eq!(ranks(&[3.0, 1.0, 1.0, 2.0]), vec![4.0, 1.5, 1.5, 3.0]);
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 4.0, 9.0, 16.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[5.0, 4.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_designs() {
        let config = ScalingConfig::default();
        assert_eq!(
            scaling_experiment(&config, &levels(&[0.0; 5]), 10, 0),
            Err(ErmError::Degenerate(0.0))
        );
        assert_eq!(
            scaling_experiment(&config, &levels(&[0.0, 1.0, 2.0, 2.0]), 10, 0),
            Err(ErmError::TooFewLevels(3))
        );
        assert_eq!(
            scaling_experiment(&config, &levels(&[0.0, 1.0, 2.0, 3.0]), 9, 0),
            Err(ErmError::TooFewReplications(9))
        );
    }

    #[test]
    fn small_run_is_deterministic_and_increasing() {
        let config = ScalingConfig {
            n_users: 200,
            d: 2,
            separation: 1.0,
            erm: ErmConfig::default(),
            n_ref: 20_000,
            n_eval: 20_000,
        };
        let grid = levels(&[0.0, 1.0, 2.0, 4.0]);
        let a = scaling_experiment(&config, &grid, 10, 3).unwrap();
        assert_eq!(a, scaling_experiment(&config, &grid, 10, 3).unwrap());
        assert!(a.slope > 0.0);
        assert!(a.levels.last().unwrap().mean > a.levels[0].mean);
    }
}
