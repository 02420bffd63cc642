use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mfsg_cli::{
    run_br_curve, run_cascade, run_solve, run_sweep, run_validate, CliError, Format, RunConfig,
    RunOutput,
};

#[derive(Debug, Parser)]
#[command(
    name = "mfsg",
    version,
    about = "Privacy-promise equilibria, sweeps and validation runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides output.dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; overrides output.format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Base RNG seed; overrides rng_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one game and write its equilibrium report.
    Solve,
    /// Classify every point of the configured parameter grid.
    Sweep,
    /// Sample the user best response over the population's noise level.
    BrCurve,
    /// Simulate an adoption cascade among the users.
    Cascade,
    /// Run the ERM and DP scaling checks.
    Validate,
}

fn execute(cli: Cli) -> Result<RunOutput, CliError> {
    let path = cli
        .config
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let mut config = RunConfig::load(&path)?;
    if let Some(dir) = cli.out {
        config.output.dir = dir;
    }
    if let Some(format) = cli.format {
        config.output.format = format;
    }
    if let Some(seed) = cli.seed {
        config.rng_seed = seed;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Solve => run_solve(&config),
        Command::Sweep => run_sweep(&config),
        Command::BrCurve => run_br_curve(&config),
        Command::Cascade => run_cascade(&config),
        Command::Validate => run_validate(&config),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(output) => {
            for line in &output.summary {
                println!("{line}");
            }
            for file in &output.files {
                println!("wrote {}", file.display());
            }
            ExitCode::from(output.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
