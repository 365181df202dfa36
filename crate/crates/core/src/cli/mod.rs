//! `diracwv` command-line front end.
//!
//! Every subcommand reads an optional strict JSON config (unknown keys are
//! rejected), runs, and writes CSV or JSON to stdout or `--out`. Exit codes:
//! 0 on success, 1 for invalid input or I/O failure, 2 when a numerical
//! procedure did not converge.

mod commands;
mod table;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

pub use commands::{
    lattice_scatter, pair_rate, series_check, sweep_transmission, trotter_convergence,
    weak_value_report, PairRateConfig, Report, ScatterConfig, SeriesConfig, SnapshotOptions,
    SweepConfig, TrotterConfig, WeakValueConfig, FREE_CONFIG, SUPERCRITICAL_CONFIG,
};
pub use table::{Cell, Table};

use crate::error::Error;

#[derive(Debug, Parser)]
#[command(
    name = "diracwv",
    version,
    about = "1+1D Dirac scattering, weak values and quantum-walk runs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transmission, reflection and weak value over a range of energies.
    SweepTransmission(IoArgs),
    /// Pair-production rate for a list of step heights.
    PairRate(IoArgs),
    /// Trotter propagator error against the exact propagator.
    TrotterConvergence(IoArgs),
    /// Series coefficients and truncated/short-time propagator residuals.
    SeriesCheck(IoArgs),
    /// Weak values of the Pauli matrices for one step configuration.
    WeakValue(IoArgs),
    /// Wave-packet scattering on the lattice (defaults to the bundled
    /// supercritical configuration).
    LatticeScatter(LatticeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct IoArgs {
    /// JSON config file; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Include wall-clock time in the summary (makes output run-dependent).
    #[arg(long)]
    pub timings: bool,
    /// Write a field snapshot every N steps.
    #[arg(long, value_name = "N")]
    pub snapshot_every: Option<usize>,
    /// Directory for snapshot CSV files.
    #[arg(long, value_name = "DIR")]
    pub snapshot_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    NonConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::NonConvergence(_) => 2,
        }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Validation(format!("{}: {err}", path.display()))
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        match err {
            Error::NonConvergence { .. }
            | Error::StillInteracting { .. }
            | Error::NotArrived { .. } => CliError::NonConvergence(err.to_string()),
            _ => CliError::Validation(err.to_string()),
        }
    }
}

/// Parses `text` as `T`, reporting the path of the offending field.
pub fn parse_config<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Validation(format!("at `{path}`: {}", e.into_inner()))
    })?;
    de.end().map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(value)
}

fn load<T: DeserializeOwned>(
    path: Option<&Path>,
    default: impl FnOnce() -> Result<T, CliError>,
) -> Result<T, CliError> {
    let Some(path) = path else {
        return default();
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn emit(report: &Report, io: &IoArgs) -> Result<(), CliError> {
    let body = match io.format {
        Format::Csv => report.table.render(),
        Format::Json => report.json.clone(),
    };
    match &io.out {
        Some(path) => fs::write(path, body).map_err(|e| CliError::io(path, e))?,
        None => std::io::stdout()
            .lock()
            .write_all(body.as_bytes())
            .map_err(|e| CliError::io(Path::new("<stdout>"), e))?,
    }
    if let Some(note) = &report.note {
        eprintln!("{note}");
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::SweepTransmission(io) => {
            let cfg = load(io.config.as_deref(), || Ok(SweepConfig::default()))?;
            emit(&sweep_transmission(&cfg)?, &io)
        }
        Command::PairRate(io) => {
            let cfg = load(io.config.as_deref(), || Ok(PairRateConfig::default()))?;
            emit(&pair_rate(&cfg)?, &io)
        }
        Command::TrotterConvergence(io) => {
            let cfg = load(io.config.as_deref(), || Ok(TrotterConfig::default()))?;
            emit(&trotter_convergence(&cfg)?, &io)
        }
        Command::SeriesCheck(io) => {
            let cfg = load(io.config.as_deref(), || Ok(SeriesConfig::default()))?;
            emit(&series_check(&cfg)?, &io)
        }
        Command::WeakValue(io) => {
            let cfg = load(io.config.as_deref(), || Ok(WeakValueConfig::default()))?;
            emit(&weak_value_report(&cfg)?, &io)
        }
        Command::LatticeScatter(args) => {
            let cfg = load(args.io.config.as_deref(), || {
                parse_config(SUPERCRITICAL_CONFIG)
            })?;
            let snapshots = SnapshotOptions {
                every: args.snapshot_every,
                dir: args.snapshot_dir.clone(),
            };
            emit(&lattice_scatter(&cfg, &snapshots, args.timings)?, &args.io)
        }
    }
}

/// `--help` and `--version` exit with 0, usage errors count as invalid input.
fn usage_exit_code(err: &clap::Error) -> i32 {
    if err.use_stderr() {
        1
    } else {
        0
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return usage_exit_code(&e);
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
