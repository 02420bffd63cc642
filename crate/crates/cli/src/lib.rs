//! Configuration-driven front end: single solves, parameter sweeps, response
//! curves, cascades and the ERM / DP validation runs, written as CSV or JSON.

pub mod config;
mod output;
mod run;

use thiserror::Error;

pub use config::{Format, RunConfig, SweepParam};
pub use run::{
    br_curve_rows, cascade_trace, run_br_curve, run_cascade, run_solve, run_sweep, run_validate,
    sweep_rows, validation, RunOutput, SweepRow, ValidationSummary,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("inconsistent result: {0}")]
    Inconsistent(String),
}

impl CliError {
    /// 1 for an internal inconsistency, 2 for usage, configuration or i/o errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Inconsistent(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
