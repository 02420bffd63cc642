use std::path::{Path, PathBuf};

use mfsg_core::dp::DpSpec;
use mfsg_core::erm::{ErmConfig, ScalingConfig};
use mfsg_core::mfg::Schedule;
use mfsg_core::{GameParams, ModelConventions, PrivacyExponent};
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_SWEEP_CAP: u64 = 1_000_000;

/// Everything a run reads from its configuration file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub game: GameSection,
    pub sweep: Option<SweepSection>,
    pub experiment: Option<ExperimentSection>,
    pub br_curve: Option<BrCurveSection>,
    pub cascade: Option<CascadeSection>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub rng_seed: u64,
}

/// Game constants; every key is optional here so a missing one can be named.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    #[serde(rename = "A_L")]
    pub a_l: Option<f64>,
    #[serde(rename = "C_L")]
    pub c_l: Option<f64>,
    #[serde(rename = "A_S")]
    pub a_s: Option<f64>,
    #[serde(rename = "P_S")]
    pub p_s: Option<f64>,
    #[serde(rename = "C_S")]
    pub c_s: Option<f64>,
    pub rho: Option<f64>,
    #[serde(rename = "N")]
    pub n: Option<u64>,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    pub c_g: Option<f64>,
    pub c_p: Option<f64>,
    pub privacy_exponent: Option<f64>,
}

/// Game parameters that a sweep may vary, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SweepParam {
    AL,
    CL,
    AS,
    PS,
    CS,
    Rho,
    N,
    M,
}

impl SweepParam {
    pub const ALL: [SweepParam; 8] = [
        SweepParam::AL,
        SweepParam::CL,
        SweepParam::AS,
        SweepParam::PS,
        SweepParam::CS,
        SweepParam::Rho,
        SweepParam::N,
        SweepParam::M,
    ];

    pub fn key(self) -> &'static str {
        match self {
            SweepParam::AL => "A_L",
            SweepParam::CL => "C_L",
            SweepParam::AS => "A_S",
            SweepParam::PS => "P_S",
            SweepParam::CS => "C_S",
            SweepParam::Rho => "rho",
            SweepParam::N => "N",
            SweepParam::M => "M",
        }
    }

    pub fn apply(self, params: &mut GameParams, value: f64) {
        match self {
            SweepParam::AL => params.a_l = value,
            SweepParam::CL => params.c_l = value,
            SweepParam::AS => params.a_s = value,
            SweepParam::PS => params.p_s = value,
            SweepParam::CS => params.c_s = value,
            SweepParam::Rho => params.rho = value,
            SweepParam::N => params.n = value as usize,
            SweepParam::M => params.m = value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub min: f64,
    pub max: f64,
    /// Number of grid points, endpoints included.
    pub steps: u64,
}

impl SweepRange {
    fn validate(&self, param: SweepParam) -> Result<(), CliError> {
        let key = format!("sweep.{}", param.key());
        if self.steps == 0 {
            return Err(CliError::Config(format!("{key}.steps must be at least 1")));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.min > self.max {
            return Err(CliError::Config(format!(
                "{key} is empty: min = {} exceeds max = {}",
                self.min, self.max
            )));
        }
        if param == SweepParam::N && self.min < 1.0 {
            return Err(CliError::Config(format!("{key}.min must be at least 1")));
        }
        Ok(())
    }

    pub fn values(&self, param: SweepParam) -> Vec<f64> {
        let steps = self.steps as usize;
        (0..steps)
            .map(|k| {
                let v = if steps == 1 {
                    self.min
                } else if k + 1 == steps {
                    self.max
                } else {
                    self.min + (self.max - self.min) * k as f64 / (steps - 1) as f64
                };
                if param == SweepParam::N {
                    v.round()
                } else {
                    v
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(rename = "A_L")]
    pub a_l: Option<SweepRange>,
    #[serde(rename = "C_L")]
    pub c_l: Option<SweepRange>,
    #[serde(rename = "A_S")]
    pub a_s: Option<SweepRange>,
    #[serde(rename = "P_S")]
    pub p_s: Option<SweepRange>,
    #[serde(rename = "C_S")]
    pub c_s: Option<SweepRange>,
    pub rho: Option<SweepRange>,
    #[serde(rename = "N")]
    pub n: Option<SweepRange>,
    #[serde(rename = "M")]
    pub m: Option<SweepRange>,
    pub cap: Option<u64>,
}

impl SweepSection {
    pub fn range(&self, param: SweepParam) -> Option<SweepRange> {
        match param {
            SweepParam::AL => self.a_l,
            SweepParam::CL => self.c_l,
            SweepParam::AS => self.a_s,
            SweepParam::PS => self.p_s,
            SweepParam::CS => self.c_s,
            SweepParam::Rho => self.rho,
            SweepParam::N => self.n,
            SweepParam::M => self.m,
        }
    }

    /// Swept parameters with their grid values, in canonical order.
    pub fn axes(&self) -> Result<Vec<(SweepParam, Vec<f64>)>, CliError> {
        let mut axes = Vec::new();
        for param in SweepParam::ALL {
            if let Some(range) = self.range(param) {
                range.validate(param)?;
                axes.push((param, range.values(param)));
            }
        }
        if axes.is_empty() {
            return Err(CliError::Config(
                "sweep section lists no parameter ranges".into(),
            ));
        }
        let total = axes
            .iter()
            .try_fold(1u64, |acc, (_, v)| acc.checked_mul(v.len() as u64))
            .unwrap_or(u64::MAX);
        let cap = self.cap.unwrap_or(DEFAULT_SWEEP_CAP);
        if total > cap {
            return Err(CliError::Config(format!(
                "sweep has {total} grid points, above the cap of {cap}; set sweep.cap = {total} to allow it"
            )));
        }
        Ok(axes)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub erm: Option<ErmSection>,
    pub dp: Option<DpSection>,
}

/// Noise levels are aggregate variances `v`, realised as learner noise
/// `σ_L = sqrt(v)` on every record.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErmSection {
    #[serde(default = "default_n_users")]
    pub n_users: usize,
    /// Second population size for the slope-ratio check.
    pub compare_n_users: Option<usize>,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_separation")]
    pub separation: f64,
    #[serde(default = "default_erm_rho")]
    pub rho: f64,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_n_large")]
    pub n_ref: usize,
    #[serde(default = "default_n_large")]
    pub n_eval: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_grad_tolerance")]
    pub grad_tolerance: f64,
}

fn default_n_users() -> usize {
    500
}
fn default_d() -> usize {
    5
}
fn default_separation() -> f64 {
    1.0
}
fn default_erm_rho() -> f64 {
    0.1
}
fn default_levels() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 2.0, 4.0]
}
fn default_replications() -> usize {
    50
}
fn default_n_large() -> usize {
    100_000
}
fn default_max_iters() -> usize {
    ErmConfig::default().max_iters
}
fn default_grad_tolerance() -> f64 {
    ErmConfig::default().grad_tolerance
}

impl ErmSection {
    pub fn scaling_config(&self, n_users: usize) -> ScalingConfig {
        ScalingConfig {
            n_users,
            d: self.d,
            separation: self.separation,
            erm: ErmConfig {
                rho: self.rho,
                max_iters: self.max_iters,
                grad_tolerance: self.grad_tolerance,
                ..ErmConfig::default()
            },
            n_ref: self.n_ref,
            n_eval: self.n_eval,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpSection {
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_sensitivity")]
    pub sensitivity: f64,
    /// `(σ_L, σ_S)` pairs.
    pub pairs: Vec<(f64, f64)>,
}

fn default_delta() -> f64 {
    DpSpec::default().delta
}
fn default_sensitivity() -> f64 {
    DpSpec::default().sensitivity
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrCurveSection {
    #[serde(rename = "sigma_L")]
    pub sigma_l: f64,
    #[serde(default = "default_n_points")]
    pub n_points: usize,
}

fn default_n_points() -> usize {
    101
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleName {
    Synchronous,
    #[default]
    Asynchronous,
}

impl From<ScheduleName> for Schedule {
    fn from(name: ScheduleName) -> Self {
        match name {
            ScheduleName::Synchronous => Schedule::Synchronous,
            ScheduleName::Asynchronous => Schedule::Asynchronous,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeSection {
    #[serde(rename = "sigma_L")]
    pub sigma_l: f64,
    pub seed_fraction: f64,
    #[serde(default)]
    pub schedule: ScheduleName,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
}

fn default_max_rounds() -> usize {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: Format,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            format: Format::Csv,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Game parameters, requiring every key not listed in `swept`.
    pub fn game_params(&self, swept: &[SweepParam]) -> Result<GameParams, CliError> {
        let g = &self.game;
        let need = |param: SweepParam, value: Option<f64>| -> Result<f64, CliError> {
            match value {
                Some(v) => Ok(v),
                None if swept.contains(&param) => Ok(f64::NAN),
                None => Err(CliError::Config(format!(
                    "missing key game.{}",
                    param.key()
                ))),
            }
        };
        let n = need(SweepParam::N, g.n.map(|n| n as f64))?;
        let exponent = match g.privacy_exponent {
            None => PrivacyExponent::default(),
            Some(alpha) => PrivacyExponent::from_value(alpha).ok_or_else(|| {
                CliError::Config(format!(
                    "game.privacy_exponent must be 1 or 0.5 (got {alpha})"
                ))
            })?,
        };
        let defaults = ModelConventions::default();
        let conventions = ModelConventions {
            c_g: g.c_g.unwrap_or(defaults.c_g),
            c_p: g.c_p.unwrap_or(defaults.c_p),
            privacy_exponent: exponent,
        };
        Ok(GameParams::new(
            need(SweepParam::AL, g.a_l)?,
            need(SweepParam::CL, g.c_l)?,
            need(SweepParam::AS, g.a_s)?,
            need(SweepParam::PS, g.p_s)?,
            need(SweepParam::CS, g.c_s)?,
            need(SweepParam::Rho, g.rho)?,
            if n.is_nan() { 1 } else { n as usize },
            need(SweepParam::M, g.m)?,
        )
        .with_conventions(conventions))
    }

    /// Fully specified, validated game parameters.
    pub fn validated_game(&self) -> Result<GameParams, CliError> {
        let params = self.game_params(&[])?;
        params
            .validate()
            .map_err(|e| CliError::Config(format!("game: {e}")))?;
        Ok(params)
    }
}
