//! Command-line orchestration for the solenoid toolkit.

pub mod commands;
pub mod config;
pub mod output;

use clap::{Parser, Subcommand};
use std::path::PathBuf;

use config::ExperimentConfig;
use output::Writer;

pub const SPEC_VERSION: &str = "1.0";

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (spec 1.0)");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error(transparent)]
    Core(#[from] solenoid_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Core(solenoid_core::Error::InvalidParam(_)) => 2,
            CliError::Budget(_) | CliError::Core(solenoid_core::Error::BudgetExceeded { .. }) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "solenoid", version = VERSION, about = "Experiments on T(x,y) = (lx mod 1, ly + f(x))")]
pub struct Cli {
    /// JSON experiment configuration; defaults are used when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dotted override, e.g. `--set system.lambda=0.5`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Output directory (falls back to the config, then $OUTPUT_DIR).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Orbit of T as CSV.
    Simulate,
    /// Bracketed e(q,p) growth table.
    Transversality,
    /// Fixed density of the transfer operator, CSV and PGM heatmap.
    Density,
    /// Ulam second eigenvalue and gamma reference value.
    Spectrum,
    /// Correlation decay along one orbit.
    Correlations,
    /// W^s norm sweep over grids.
    Sobolev,
    /// Monte-Carlo bad-parameter-set measure.
    Genericity,
    /// Merge the JSON results in the output directory.
    Report,
}

/// Executes one subcommand with an already resolved configuration.
pub fn execute(command: Command, cfg: &ExperimentConfig, out_dir: PathBuf) -> Result<Vec<PathBuf>, CliError> {
    let mut writer = Writer::new(out_dir, cfg.echo());
    let outcome = match command {
        Command::Simulate => commands::simulate(cfg, &mut writer)?,
        Command::Transversality => commands::transversality(cfg, &mut writer)?,
        Command::Density => commands::density(cfg, &mut writer)?,
        Command::Spectrum => commands::spectrum(cfg, &mut writer)?,
        Command::Correlations => commands::correlations(cfg, &mut writer)?,
        Command::Sobolev => commands::sobolev(cfg, &mut writer)?,
        Command::Genericity => commands::genericity(cfg, &mut writer)?,
        Command::Report => commands::report(cfg, &mut writer)?,
    };
    if outcome.budget_exhausted {
        return Err(CliError::Budget(format!("partial results written to {}", writer.dir.display())));
    }
    Ok(writer.written().to_vec())
}

/// Parses arguments, runs, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_cli(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run_cli(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("threads: {e}")))?;
    }
    let text = match &cli.config {
        Some(path) => Some(
            std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?,
        ),
        None => None,
    };
    let cfg = ExperimentConfig::load(text.as_deref(), &cli.overrides)?;
    let out = cfg.output_dir(cli.out.as_ref());
    execute(cli.command, &cfg, out)
}
