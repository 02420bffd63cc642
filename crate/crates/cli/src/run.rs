use std::path::PathBuf;

use mfsg_core::dp::{scaling_check, DpScalingReport, DpSpec};
use mfsg_core::erm::{scaling_experiment, ScalingReport};
use mfsg_core::mfg::{br_curve, cascade_simulate, gamma, BestResponse, CascadeTrace, ResponseKind};
use mfsg_core::stackelberg::{pbne_solve, tau_hat, StackelbergError};
use mfsg_core::{GameParams, NoiseProfile};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Format, RunConfig, SweepParam};
use crate::output::{num, opt_num, write_csv, write_json};
use crate::CliError;

pub const SWEEP_RESULT_COLUMNS: [&str; 5] = [
    "regime",
    "sigma_L_dagger",
    "sigma_bar_dagger",
    "U_L",
    "tau_hat",
];
pub const ERM_COLUMNS: [&str; 5] = [
    "level_index",
    "v",
    "mean_excess_risk",
    "std_error",
    "replications",
];
pub const DP_COLUMNS: [&str; 6] = [
    "pair_index",
    "sigma_L",
    "sigma_S",
    "combined_std",
    "epsilon",
    "valid",
];
pub const BR_CURVE_COLUMNS: [&str; 2] = ["sigma_bar_other", "response"];
pub const CASCADE_COLUMNS: [&str; 4] = ["round", "adopters", "adoption_fraction", "mean_variance"];

/// Acceptance thresholds reported by `validate`.
pub const MIN_R_SQUARED: f64 = 0.9;
pub const SLOPE_RATIO_RANGE: (f64, f64) = (0.3, 0.7);
pub const MAX_DP_DEVIATION: f64 = 1e-12;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    /// Sweep points whose closed-form answer failed verification.
    pub inconsistent: usize,
    pub summary: Vec<String>,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        i32::from(self.inconsistent > 0)
    }
}

fn output_path(config: &RunConfig, stem: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(&config.output.dir)?;
    Ok(config
        .output
        .dir
        .join(format!("{stem}.{}", config.output.format.extension())))
}

fn checked(params: GameParams) -> Result<GameParams, CliError> {
    params
        .validate()
        .map_err(|e| CliError::Config(format!("game: {e}")))?;
    Ok(params)
}

/// Solves one game and writes its equilibrium report.
pub fn run_solve(config: &RunConfig) -> Result<RunOutput, CliError> {
    let params = config.validated_game()?;
    let report = pbne_solve(&params).map_err(|e| CliError::Inconsistent(e.to_string()))?;
    let path = output_path(config, "solve")?;
    match config.output.format {
        Format::Json => write_json(&path, &report)?,
        Format::Csv => {
            let header = [
                "regime",
                "sigma_L_dagger",
                "sigma_bar_dagger",
                "U_L",
                "U_S",
                "tau_hat",
                "tau_exact",
                "kappa",
                "boundary",
            ];
            let row = vec![
                report.regime.as_str().to_string(),
                num(report.sigma_l_dagger),
                num(report.sigma_bar_dagger),
                num(report.learner_utility_at_eq),
                num(report.user_utility_at_eq),
                opt_num(report.thresholds.tau_hat),
                opt_num(report.thresholds.tau_exact),
                num(report.thresholds.kappa),
                report
                    .boundary
                    .map(|b| format!("{b:?}"))
                    .unwrap_or_default(),
            ];
            write_csv(&path, &header, &[row])?;
        }
    }
    Ok(RunOutput {
        summary: vec![format!(
            "regime={} sigma_L_dagger={} sigma_bar_dagger={} U_L={}",
            report.regime.as_str(),
            num(report.sigma_l_dagger),
            num(report.sigma_bar_dagger),
            num(report.learner_utility_at_eq)
        )],
        files: vec![path],
        inconsistent: 0,
    })
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub inputs: Vec<(SweepParam, f64)>,
    /// Regime name, or `Inconsistent` when verification failed.
    pub regime: String,
    pub sigma_l_dagger: f64,
    pub sigma_bar_dagger: f64,
    pub learner_utility: f64,
    pub tau_hat: Option<f64>,
}

impl SweepRow {
    pub fn consistent(&self) -> bool {
        self.regime != "Inconsistent"
    }

    fn cells(&self) -> Vec<String> {
        let mut cells: Vec<String> = self.inputs.iter().map(|&(_, v)| num(v)).collect();
        cells.extend([
            self.regime.clone(),
            num(self.sigma_l_dagger),
            num(self.sigma_bar_dagger),
            num(self.learner_utility),
            opt_num(self.tau_hat),
        ]);
        cells
    }

    fn json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for &(param, v) in &self.inputs {
            map.insert(param.key().to_string(), v.into());
        }
        map.insert("regime".into(), self.regime.clone().into());
        map.insert("sigma_L_dagger".into(), self.sigma_l_dagger.into());
        map.insert("sigma_bar_dagger".into(), self.sigma_bar_dagger.into());
        map.insert("U_L".into(), self.learner_utility.into());
        map.insert("tau_hat".into(), self.tau_hat.into());
        serde_json::Value::Object(map)
    }
}

fn solve_point(params: &GameParams, inputs: Vec<(SweepParam, f64)>) -> SweepRow {
    let tau_hat = tau_hat(params).ok();
    match pbne_solve(params) {
        Ok(report) => SweepRow {
            inputs,
            regime: report.regime.as_str().to_string(),
            sigma_l_dagger: report.sigma_l_dagger,
            sigma_bar_dagger: report.sigma_bar_dagger,
            learner_utility: report.learner_utility_at_eq,
            tau_hat,
        },
        Err(e) => {
            let sigma_l = match e {
                StackelbergError::Inconsistent {
                    closed_form_sigma, ..
                } => closed_form_sigma,
                StackelbergError::NotFixedPoint { sigma_l, .. } => sigma_l,
                StackelbergError::OutsidePromiseRegime { .. } => 0.0,
            };
            let sigma_bar = gamma(params, sigma_l);
            SweepRow {
                inputs,
                regime: "Inconsistent".into(),
                sigma_l_dagger: sigma_l,
                sigma_bar_dagger: sigma_bar,
                learner_utility: params.learner_utility(sigma_l, sigma_bar),
                tau_hat,
            }
        }
    }
}

/// All sweep rows in lexicographic grid order (first swept key slowest),
/// evaluated on the current rayon pool.
pub fn sweep_rows(config: &RunConfig) -> Result<Vec<SweepRow>, CliError> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep needs a [sweep] section".into()))?;
    let axes = sweep.axes()?;
    let swept: Vec<SweepParam> = axes.iter().map(|(p, _)| *p).collect();
    let base = config.game_params(&swept)?;

    let total: usize = axes.iter().map(|(_, v)| v.len()).product();
    let mut points = Vec::with_capacity(total);
    for index in 0..total {
        let mut rest = index;
        let mut inputs = vec![(SweepParam::AL, 0.0); axes.len()];
        for (slot, (param, values)) in axes.iter().enumerate().rev() {
            inputs[slot] = (*param, values[rest % values.len()]);
            rest /= values.len();
        }
        let mut params = base;
        for &(param, v) in &inputs {
            param.apply(&mut params, v);
        }
        points.push((checked(params)?, inputs));
    }
    Ok(points
        .into_par_iter()
        .map(|(params, inputs)| solve_point(&params, inputs))
        .collect())
}

pub fn run_sweep(config: &RunConfig) -> Result<RunOutput, CliError> {
    let rows = sweep_rows(config)?;
    let path = output_path(config, "sweep")?;
    match config.output.format {
        Format::Csv => {
            let mut header: Vec<&str> = rows
                .first()
                .map(|r| r.inputs.iter().map(|(p, _)| p.key()).collect())
                .unwrap_or_default();
            header.extend(SWEEP_RESULT_COLUMNS);
            let cells: Vec<Vec<String>> = rows.iter().map(SweepRow::cells).collect();
            write_csv(&path, &header, &cells)?;
        }
        Format::Json => {
            let values: Vec<serde_json::Value> = rows.iter().map(SweepRow::json).collect();
            write_json(&path, &values)?;
        }
    }
    let inconsistent = rows.iter().filter(|r| !r.consistent()).count();
    Ok(RunOutput {
        files: vec![path],
        inconsistent,
        summary: vec![format!(
            "{} grid points, {inconsistent} inconsistent",
            rows.len()
        )],
    })
}

fn response_label(response: &BestResponse) -> String {
    match response.kind {
        ResponseKind::Zero => "0".into(),
        ResponseKind::Max => num(response.upper),
        ResponseKind::Indifferent => "indifferent".into(),
    }
}

pub fn br_curve_rows(config: &RunConfig) -> Result<Vec<(f64, BestResponse)>, CliError> {
    let params = config.validated_game()?;
    let section = config
        .br_curve
        .ok_or_else(|| CliError::Config("br-curve needs a [br_curve] section".into()))?;
    if section.n_points < 2 {
        return Err(CliError::Config(format!(
            "br_curve.n_points must be at least 2 (got {})",
            section.n_points
        )));
    }
    params
        .check_std("br_curve.sigma_L", section.sigma_l)
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(br_curve(&params, section.sigma_l, section.n_points))
}

pub fn run_br_curve(config: &RunConfig) -> Result<RunOutput, CliError> {
    let rows = br_curve_rows(config)?;
    let path = output_path(config, "br_curve")?;
    match config.output.format {
        Format::Csv => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|(s, br)| vec![num(*s), response_label(br)])
                .collect();
            write_csv(&path, &BR_CURVE_COLUMNS, &cells)?;
        }
        Format::Json => {
            let values: Vec<serde_json::Value> = rows
                .iter()
                .map(|(s, br)| serde_json::json!({ "sigma_bar_other": s, "response": response_label(br) }))
                .collect();
            write_json(&path, &values)?;
        }
    }
    Ok(RunOutput {
        files: vec![path],
        ..RunOutput::default()
    })
}

pub fn cascade_trace(config: &RunConfig) -> Result<CascadeTrace, CliError> {
    let params = config.validated_game()?;
    let section = config
        .cascade
        .ok_or_else(|| CliError::Config("cascade needs a [cascade] section".into()))?;
    params
        .check_std("cascade.sigma_L", section.sigma_l)
        .map_err(|e| CliError::Config(e.to_string()))?;
    cascade_simulate(
        &params,
        section.sigma_l,
        section.seed_fraction,
        section.schedule.into(),
        config.rng_seed,
        section.max_rounds,
    )
    .map_err(|e| CliError::Config(format!("cascade: {e}")))
}

pub fn run_cascade(config: &RunConfig) -> Result<RunOutput, CliError> {
    let trace = cascade_trace(config)?;
    let path = output_path(config, "cascade")?;
    let n = trace.final_state().len();
    let m2 = trace.m * trace.m;
    let rows: Vec<(usize, usize, f64, f64)> = trace
        .rounds
        .iter()
        .zip(&trace.adoption_fraction)
        .enumerate()
        .map(|(round, (state, &fraction))| {
            let adopters = state.iter().filter(|&&on| on).count();
            (round, adopters, fraction, m2 * adopters as f64 / n as f64)
        })
        .collect();
    match config.output.format {
        Format::Csv => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|&(r, a, f, v)| vec![r.to_string(), a.to_string(), num(f), num(v)])
                .collect();
            write_csv(&path, &CASCADE_COLUMNS, &cells)?;
        }
        Format::Json => {
            let values: Vec<serde_json::Value> = rows
                .iter()
                .map(|&(r, a, f, v)| {
                    serde_json::json!({ "round": r, "adopters": a, "adoption_fraction": f, "mean_variance": v })
                })
                .collect();
            write_json(&path, &values)?;
        }
    }
    Ok(RunOutput {
        files: vec![path],
        summary: vec![format!(
            "converged={} final_adoption={} passes={}",
            trace.converged,
            num(*trace
                .adoption_fraction
                .last()
                .expect("trace has an initial state")),
            trace.passes()
        )],
        ..RunOutput::default()
    })
}

/// Verdicts of a validation run against the acceptance thresholds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationSummary {
    pub erm: Option<ScalingReport>,
    pub erm_compare: Option<ScalingReport>,
    pub slope_ratio: Option<f64>,
    pub dp: Option<DpScalingReport>,
    pub lines: Vec<String>,
    pub passed: bool,
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn validation(config: &RunConfig) -> Result<ValidationSummary, CliError> {
    let experiment = config
        .experiment
        .as_ref()
        .ok_or_else(|| CliError::Config("validate needs an [experiment] section".into()))?;
    if experiment.erm.is_none() && experiment.dp.is_none() {
        return Err(CliError::Config(
            "experiment section needs [experiment.erm] or [experiment.dp]".into(),
        ));
    }
    let mut summary = ValidationSummary {
        erm: None,
        erm_compare: None,
        slope_ratio: None,
        dp: None,
        lines: Vec::new(),
        passed: true,
    };

    if let Some(erm) = &experiment.erm {
        if let Some(&bad) = erm.levels.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(CliError::Config(format!(
                "experiment.erm.levels must be non-negative variances (got {bad})"
            )));
        }
        let levels: Vec<NoiseProfile> = erm
            .levels
            .iter()
            .map(|v| NoiseProfile::new(v.sqrt(), 0.0, 0.0))
            .collect();
        let run = |n_users: usize| {
            scaling_experiment(
                &erm.scaling_config(n_users),
                &levels,
                erm.replications,
                config.rng_seed,
            )
            .map_err(|e| CliError::Config(format!("experiment.erm: {e}")))
        };
        let report = run(erm.n_users)?;
        let fit_ok = report.r_squared >= MIN_R_SQUARED;
        let rank_ok = report.rank_correlation == 1.0;
        summary.passed &= fit_ok && rank_ok;
        summary.lines.push(format!(
            "erm N={}: slope={} r_squared={} (>= {MIN_R_SQUARED}: {}) rank_correlation={} (= 1: {})",
            erm.n_users,
            num(report.slope),
            num(report.r_squared),
            verdict(fit_ok),
            num(report.rank_correlation),
            verdict(rank_ok)
        ));
        if let Some(n_compare) = erm.compare_n_users {
            let compare = run(n_compare)?;
            let ratio = compare.slope / report.slope;
            let ratio_ok = (SLOPE_RATIO_RANGE.0..=SLOPE_RATIO_RANGE.1).contains(&ratio);
            summary.passed &= ratio_ok;
            summary.lines.push(format!(
                "erm slope ratio N={n_compare}/N={}: {} (in [{}, {}]: {})",
                erm.n_users,
                num(ratio),
                SLOPE_RATIO_RANGE.0,
                SLOPE_RATIO_RANGE.1,
                verdict(ratio_ok)
            ));
            summary.slope_ratio = Some(ratio);
            summary.erm_compare = Some(compare);
        }
        summary.erm = Some(report);
    }

    if let Some(dp) = &experiment.dp {
        let spec = DpSpec::new(dp.delta, dp.sensitivity)
            .map_err(|e| CliError::Config(format!("experiment.dp: {e}")))?;
        let report = scaling_check(&spec, &dp.pairs)
            .map_err(|e| CliError::Config(format!("experiment.dp: {e}")))?;
        let ok = report.max_deviation <= MAX_DP_DEVIATION;
        summary.passed &= ok;
        summary.lines.push(format!(
            "dp: max_deviation={} (<= {MAX_DP_DEVIATION}: {})",
            num(report.max_deviation),
            verdict(ok)
        ));
        summary.dp = Some(report);
    }
    summary
        .lines
        .push(format!("validation: {}", verdict(summary.passed)));
    Ok(summary)
}

fn erm_cells(report: &ScalingReport) -> Vec<Vec<String>> {
    report
        .levels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            vec![
                i.to_string(),
                num(l.v),
                num(l.mean),
                num(l.std_error),
                l.replications.to_string(),
            ]
        })
        .collect()
}

/// Runs the ERM and DP scaling checks and writes their reports plus a
/// pass/fail summary.
pub fn run_validate(config: &RunConfig) -> Result<RunOutput, CliError> {
    let summary = validation(config)?;
    let mut files = Vec::new();
    let format = config.output.format;
    let reports: [(&str, Option<&ScalingReport>); 2] = [
        ("erm_scaling", summary.erm.as_ref()),
        ("erm_scaling_compare", summary.erm_compare.as_ref()),
    ];
    for (stem, report) in reports {
        if let Some(report) = report {
            let path = output_path(config, stem)?;
            match format {
                Format::Csv => write_csv(&path, &ERM_COLUMNS, &erm_cells(report))?,
                Format::Json => write_json(&path, report)?,
            }
            files.push(path);
        }
    }
    if let Some(report) = &summary.dp {
        let path = output_path(config, "dp_scaling")?;
        match format {
            Format::Csv => {
                let cells: Vec<Vec<String>> = report
                    .rows
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        vec![
                            i.to_string(),
                            num(r.sigma_l),
                            num(r.sigma_s),
                            num(r.combined_std),
                            num(r.epsilon),
                            r.valid.to_string(),
                        ]
                    })
                    .collect();
                write_csv(&path, &DP_COLUMNS, &cells)?;
            }
            Format::Json => write_json(&path, report)?,
        }
        files.push(path);
    }
    let path = config.output.dir.join("validate_summary.txt");
    std::fs::write(&path, summary.lines.join("\n") + "\n")?;
    files.push(path);
    Ok(RunOutput {
        files,
        inconsistent: 0,
        summary: summary.lines,
    })
}
