mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Competing-risks hazard estimation and loan actuarial tools.
#[derive(Debug, Parser)]
#[command(name = "loanrisk", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// RNG seed for commands that draw random numbers.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Two-sided significance level for confidence intervals.
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Directory receiving outputs and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    pub output_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter loans, resolve outcomes and write observations.
    Ingest(commands::IngestArgs),
    /// Cause-specific hazard curves with confidence intervals.
    Estimate(commands::EstimateArgs),
    /// Pairwise credit-risk convergence months between bands.
    Converge(commands::ConvergeArgs),
    /// One-month and lifetime annualized returns by loan age.
    Returns(commands::ReturnsArgs),
    /// Monthly and total savings from refinancing.
    Savings(commands::SavingsArgs),
    /// Smoothed recovery curve and gamma-kernel fit.
    Recovery(commands::RecoveryArgs),
    /// Monte Carlo study of the estimator against a known distribution.
    Simulate(commands::SimulateArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
