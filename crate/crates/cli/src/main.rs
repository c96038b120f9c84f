use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod analyze;
mod commands;
mod config;

use config::{ConfigError, RunConfig};

pub const WORKERS_ENV: &str = "SUBRADIANCE_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "subradiance",
    version,
    about = "Subradiant scaling in disordered waveguide-QED chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; defaults apply to omitted keys.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides `output`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Master seed (overrides `ensemble.master_seed`).
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads; falls back to $SUBRADIANCE_WORKERS, then the core count.
    #[arg(long, global = true, value_name = "K")]
    workers: Option<usize>,
    /// Dotted-path override, e.g. `--set ensemble.n_realizations=200`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-mode spectrum of individual realizations.
    Spectrum,
    /// Disorder ensemble over the (N, W) grid.
    Ensemble,
    /// Fits, characteristic scales, collapses and figure data from an ensemble run.
    Analyze,
    /// Human-readable summary of an analysis run.
    Report,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] subradiance::Error),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(subradiance::Error::Config(_) | subradiance::Error::InvalidSpec(_)) => 2,
            _ => 1,
        }
    }
}

/// Execution context shared by the subcommands.
pub struct Run {
    pub config: RunConfig,
    pub out: PathBuf,
    pub workers: usize,
}

fn resolve_workers(flag: Option<usize>, config: Option<usize>) -> Result<usize, ConfigError> {
    if let Some(k) = flag {
        return if k == 0 {
            Err(ConfigError::Invalid("--workers must be at least 1".into()))
        } else {
            Ok(k)
        };
    }
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(k),
            _ => Err(ConfigError::Invalid(format!(
                "{WORKERS_ENV}={v:?} is not a positive integer"
            ))),
        };
    }
    Ok(config.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = RunConfig::load(cli.config.as_deref(), &cli.set)?;
    if let Some(seed) = cli.seed {
        config.ensemble.master_seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output = out.display().to_string();
    }
    let workers = resolve_workers(cli.workers, config.ensemble.workers)?;
    let run = Run {
        out: PathBuf::from(&config.output),
        config,
        workers,
    };
    match cli.command {
        Command::Spectrum => commands::spectrum(&run),
        Command::Ensemble => commands::ensemble(&run),
        Command::Analyze => analyze::analyze(&run),
        Command::Report => commands::report(&run),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
