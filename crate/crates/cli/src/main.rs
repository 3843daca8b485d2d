//! `parisk`: privacy-at-risk calibration from the command line.
//!
//! Exit status is 0 on success, 1 when a computation has no admissible
//! answer and 2 on invalid usage.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "parisk",
    version,
    about = "Privacy-at-risk calibration for the Laplace mechanism"
)]
pub struct Cli {
    /// Output format. Curve-shaped outputs default to CSV.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write output to this file instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    /// Master seed for stochastic commands.
    #[arg(long, global = true, env = "PAR_SEED", default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Confidence, privacy level or recalibrated noise level for one of the three cases.
    Risk(RiskArgs),
    /// Number of sensitivity samples for a DKW accuracy and tolerance.
    SampleSize(SampleSizeArgs),
    /// Sampled sensitivity of a query over a CSV dataset.
    Sensitivity(SensitivityArgs),
    /// Basic, advanced and privacy-at-risk composition table.
    Compose(ComposeArgs),
    /// Compensation budget and its cost-optimal privacy level.
    Budget(BudgetArgs),
    /// Monte Carlo checks of the analytic formulas.
    Verify(VerifyArgs),
    /// RMSE of output-perturbed ridge regression over noise levels.
    Rmse(RmseArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solve {
    Eps,
    Gamma,
    Eps0,
}

#[derive(Debug, Args)]
pub struct RiskArgs {
    /// 1: noise only, 2: sampled sensitivity, 3: both.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub case: u8,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub eps0: Option<f64>,
    /// Confidence that `eps` holds.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Query output dimension.
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    /// Quantity to solve for; inferred from the missing flag when omitted.
    #[arg(long, value_enum)]
    pub solve: Option<Solve>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Confidence level of the sampled sensitivity.
    #[arg(long)]
    pub gamma2: Option<f64>,
    /// Target empirical confidence to plan for.
    #[arg(long)]
    pub gamma_hat: Option<f64>,
    /// Emit `points` (eps, gamma) pairs on (0, eps0] instead of one record.
    #[arg(long)]
    pub curve: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SampleSizeArgs {
    #[arg(long)]
    pub rho: f64,
    #[arg(long)]
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QueryName {
    Count,
    Sum,
    Mean,
    Ridge,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    /// CSV with a header row and numeric columns.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub query: QueryName,
    /// Column for sum/mean, or the predicate column for count.
    #[arg(long)]
    pub column: Option<usize>,
    /// Count rows whose `column` is at least this value.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Target column; when given the data are normalised around it.
    #[arg(long)]
    pub target: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    pub lambda: f64,
    /// Records per sampled dataset.
    #[arg(long)]
    pub p: usize,
    /// Number of neighbour pairs.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub gamma2: f64,
    /// DKW accuracy, used for eta when the true sensitivity is unknown.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Known sensitivity of the query.
    #[arg(long)]
    pub delta_true: Option<f64>,
    /// Also write the raw samples to this CSV.
    #[arg(long)]
    pub samples_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    #[arg(long = "E", default_value_t = 5500.0)]
    pub e: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long = "Emin", default_value_t = 0.0)]
    pub e_min: f64,
    #[arg(long = "N", default_value_t = 100)]
    pub population: u64,
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    #[arg(long)]
    pub eps0: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub n_max: u64,
    /// Privacy-at-risk level; the cost-optimal one when omitted.
    #[arg(long, requires = "gamma")]
    pub eps: Option<f64>,
    #[arg(long, requires = "eps")]
    pub gamma: Option<f64>,
    #[command(flatten)]
    pub cost: CostArgs,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    #[arg(long)]
    pub eps0: f64,
    #[command(flatten)]
    pub cost: CostArgs,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    /// Evaluate the budget at this privacy-at-risk level.
    #[arg(long, conflicts_with = "optimize")]
    pub eps: Option<f64>,
    /// Find the cost-optimal privacy level.
    #[arg(long)]
    pub optimize: bool,
    /// Largest acceptable expected absolute error.
    #[arg(long, requires = "budget_cap")]
    pub mae_max: Option<f64>,
    /// Total budget available.
    #[arg(long, requires = "mae_max")]
    pub budget_cap: Option<f64>,
    /// Confidence for the feasibility interval; defaults to the one at the evaluated level.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Emit the budget curve on this many points.
    #[arg(long)]
    pub curve: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Gamma1,
    Overlap,
    Composition,
    Cost,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Target::All)]
    pub target: Target,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RmseArgs {
    /// CSV dataset; synthetic data are generated when omitted.
    #[arg(long, requires = "target")]
    pub data: Option<PathBuf>,
    /// Response column of `--data`.
    #[arg(long)]
    pub target: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub records: usize,
    #[arg(long, default_value_t = 5)]
    pub features: usize,
    /// Noise levels to evaluate.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1,2,5")]
    pub eps0: Vec<f64>,
    /// Sensitivity of the ridge coefficients.
    #[arg(long)]
    pub sensitivity: f64,
    #[arg(long, default_value_t = 50)]
    pub runs: usize,
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
    #[arg(long, default_value_t = 0.01)]
    pub lambda: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("parisk: {e}");
            e.exit_code()
        }
    }
}
