//! `mpower`: tail power estimation from the sample maximum.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_ACCEPTANCE: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "mpower", version, about = "Estimate tail power from the sample maximum")]
pub struct Cli {
    /// Master seed; MPOWER_SEED applies only when the flag is absent.
    #[arg(long, global = true, env = "MPOWER_SEED")]
    pub seed: Option<u64>,

    /// Worker thread hint. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Running estimate over a data file, one value per line.
    Estimate(EstimateArgs),
    /// One-sided test of H0: theta <= theta0 from a data file.
    Test(TestArgs),
    /// Run an experiment plan and write CSV and JSON reports.
    Experiment(ExperimentArgs),
    /// Draw values from a model, one per line.
    Sample(SampleArgs),
    /// Run the acceptance suite.
    Acceptance(AcceptanceArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    pub data: PathBuf,
    /// Comma-separated checkpoint counts; defaults to powers of ten and the
    /// sample size.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<u64>>,
    /// Values are log2 magnitudes.
    #[arg(long)]
    pub log2: bool,
    /// Directory for `trace.csv`; the trace goes to stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    pub data: PathBuf,
    #[arg(long)]
    pub theta0: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Tail constant c, used when the estimate ties theta0.
    #[arg(long, requires = "tau")]
    pub c: Option<f64>,
    /// Log-power tau, used when the estimate ties theta0.
    #[arg(long, requires = "c", allow_negative_numbers = true)]
    pub tau: Option<f64>,
    /// Directory for `test_report.json`, also printed to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long, default_value = "mpower-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Model spec as inline JSON or a path to a JSON file.
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub n: usize,
    /// Output file; stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AcceptanceArgs {
    #[arg(long, default_value_t = 1.0, hide = true)]
    pub tolerance_scale: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}
