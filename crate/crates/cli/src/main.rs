//! `seqae`: batch experiments for sequential automorphism-ensemble decoding.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

/// Bad or inconsistent user input; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "seqae", version, about = "Sequential automorphism-ensemble decoding experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct GlobalArgs {
    /// Master seed for all randomness [default: 1]
    #[arg(long, global = true, help_heading = "Global options")]
    pub seed: Option<u64>,
    /// Worker threads [default: available parallelism]
    #[arg(long, global = true, help_heading = "Global options")]
    pub workers: Option<usize>,
    /// Output file (stdout when omitted)
    #[arg(long, global = true, help_heading = "Global options")]
    pub out: Option<PathBuf>,
    /// JSON file with default values for any flag; flags given on the command line win
    #[arg(long, global = true, help_heading = "Global options")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a code and print its information set
    Construct(commands::ConstructArgs),
    /// Sample an ensemble of inequivalent code automorphisms
    SampleAutos(commands::SampleArgs),
    /// Record per-step path metrics of the full ensemble for threshold training
    CollectDataset(commands::CollectArgs),
    /// Train stopping thresholds from a dataset
    OptimizeSigma(commands::OptimizeArgs),
    /// Estimate BLER and complexity
    Simulate(commands::SimulateArgs),
    /// Histogram of n_dec with the oracle complexities
    OracleStats(commands::OracleArgs),
    /// Per-trial path metric and least-squares metric, split by outcome
    MetricBoxplot(commands::BoxplotArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
