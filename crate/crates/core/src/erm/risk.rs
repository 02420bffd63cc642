use serde::{Deserialize, Serialize};

use super::fit::dot;
use super::{erm_fit, Classifier, Dataset, ErmConfig, ErmError, GeneratorSpec};

pub const MIN_EVAL_RECORDS: usize = 1000;

/// Paired Monte-Carlo estimate of the excess regularised expected loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcessRisk {
    pub estimate: f64,
    pub std_error: f64,
}

/// Approximates the population minimiser by fitting a large clean sample.
pub fn reference_classifier(
    generator: &GeneratorSpec,
    config: &ErmConfig,
    n_ref: usize,
    rng_seed: u64,
) -> Result<Classifier, ErmError> {
    let data = generator.sample(n_ref, rng_seed);
    Ok(erm_fit(&data, config)?.classifier)
}

/// Evaluates `E{ρR(f_d) + l(Z, f_d)} − E{ρR(f*) + l(Z, f*)}` on fresh clean
/// records drawn from `generator`.
pub fn excess_risk(
    f_d: &Classifier,
    f_star: &Classifier,
    config: &ErmConfig,
    generator: &GeneratorSpec,
    n_eval: usize,
    rng_seed: u64,
) -> Result<ExcessRisk, ErmError> {
    if n_eval < MIN_EVAL_RECORDS {
        return Err(ErmError::TooFewEvalRecords {
            required: MIN_EVAL_RECORDS,
            got: n_eval,
        });
    }
    config.validate()?;
    let eval = generator.sample(n_eval, rng_seed);
    Ok(excess_risk_on(f_d, f_star, config, &eval))
}

/// Paired excess risk on a given evaluation set. Both classifiers see the same
/// records, so identical arguments give exactly zero.
pub fn excess_risk_on(
    f_d: &Classifier,
    f_star: &Classifier,
    config: &ErmConfig,
    eval: &Dataset,
) -> ExcessRisk {
    let penalty_gap = config.penalty(&f_d.weights) - config.penalty(&f_star.weights);
    let diffs: Vec<f64> = eval
        .records()
        .map(|(x, y)| {
            config.loss.value(y * dot(&f_d.weights, x))
                - config.loss.value(y * dot(&f_star.weights, x))
        })
        .collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = if diffs.len() > 1 {
        diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    ExcessRisk {
        estimate: penalty_gap + mean,
        std_error: (var / n).sqrt(),
    }
}
