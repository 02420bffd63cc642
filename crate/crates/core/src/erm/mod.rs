//! Regularised ERM on synthetic, doubly perturbed data, used to measure how
//! excess expected loss grows with injected noise variance.

mod data;
mod experiment;
mod fit;
mod risk;

use thiserror::Error;

pub use data::{generate_synthetic, perturb_dataset, Dataset, GeneratorSpec, PerturbationSpec};
pub use experiment::{scaling_experiment, LevelResult, ScalingConfig, ScalingReport};
pub use fit::{erm_fit, Classifier, ErmConfig, Fit, Loss};
pub use risk::{excess_risk, excess_risk_on, reference_classifier, ExcessRisk};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ErmError {
    #[error("feature matrix has {features} entries, expected d={d} times {labels} labels")]
    Shape {
        d: usize,
        features: usize,
        labels: usize,
    },
    #[error("labels must be -1 or +1 (got {0})")]
    Label(f64),
    #[error("noise standard deviation must be finite and non-negative (got {0})")]
    NoiseStd(f64),
    #[error("expected {expected} per-user noise levels, got {got}")]
    UserCount { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("at least {required} evaluation records are required (got {got})")]
    TooFewEvalRecords { required: usize, got: usize },
    #[error("at least 4 distinct noise levels are required (got {0})")]
    TooFewLevels(usize),
    #[error("at least 10 replications are required (got {0})")]
    TooFewReplications(usize),
    #[error("degenerate regression: all noise levels share v = {0}")]
    Degenerate(f64),
}
