//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 I/O or unreadable
//! input, 4 training failure, 5 field-capacity estimation failure.

mod commands;
pub mod config;
pub mod report;
pub mod suite;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use config::{load_config, parse_config, RunConfig};
pub use report::{parse_eval_report, ParsedReport};
pub use suite::{parse_suite, SuiteRow, DEFAULT_SUITE};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Training(String),
    #[error("{0}")]
    Estimation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Training(_) => 4,
            CliError::Estimation(_) => 5,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "soilvwc", version, about = "Soil moisture estimation from low-cost sensors")]
pub struct Cli {
    /// Config file with `section.key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Seed for every random stream (overrides `run.seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Primary output file.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Suppress progress and summary output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset CSV.
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,
    /// Algorithm: svr, rf, gbr or mlp.
    #[arg(long, value_name = "FAMILY")]
    pub model: String,
    /// Comma-separated channel columns, or `all`.
    #[arg(long, value_name = "LIST", default_value = "all")]
    pub features: String,
    /// Keep an SVR whose solver hit its iteration budget.
    #[arg(long)]
    pub allow_partial: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset and its truth sidecar.
    Simulate,
    /// Fit a model on a whole dataset and save it.
    Train(FitArgs),
    /// Predict VWC for a dataset with a saved model.
    Predict {
        /// Saved model container.
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        /// Dataset CSV.
        #[arg(long, value_name = "PATH")]
        data: PathBuf,
    },
    /// K-fold cross-validation report.
    Crossval {
        #[command(flatten)]
        fit: FitArgs,
        /// Number of folds (overrides `cv.folds`).
        #[arg(long)]
        folds: Option<usize>,
        /// Write per-record held-out predictions here.
        #[arg(long, value_name = "PATH")]
        predictions: Option<PathBuf>,
    },
    /// Estimate field capacity from the VWC column or from model predictions.
    Fieldcap {
        /// Dataset CSV.
        #[arg(long, value_name = "PATH")]
        data: PathBuf,
        /// Saved model; its predictions replace the VWC column.
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
        /// Rain record (sidecar format); defaults to the data's `.truth` file.
        #[arg(long, value_name = "PATH")]
        rain: Option<PathBuf>,
    },
    /// Cross-validate every suite row and render the comparison table.
    Compare {
        /// Dataset CSV.
        #[arg(long, value_name = "PATH")]
        data: PathBuf,
        /// Suite file; defaults to the built-in six-row suite.
        #[arg(long, value_name = "PATH")]
        suite: Option<PathBuf>,
        /// Rain record for the field capacity columns.
        #[arg(long, value_name = "PATH")]
        rain: Option<PathBuf>,
        /// Also write a gnuplot script for the tidy CSV given by --out.
        #[arg(long, value_name = "PATH")]
        plot_script: Option<PathBuf>,
        /// Keep SVR rows whose solver hit its iteration budget.
        #[arg(long)]
        allow_partial: bool,
    },
}

/// Runs the CLI with explicit output streams and returns the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match commands::dispatch(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
