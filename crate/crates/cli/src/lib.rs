//! The `congruent` command-line tool.
//!
//! Each subcommand prints a JSON summary to stdout, or with `--out DIR`
//! writes JSON reports, CSV tables and figure-panel data there.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use congruent::effect::Contrast;
use congruent::numeric::Seed;
use serde_json::Value;

pub mod commands;
pub mod output;
pub mod reproduce;

use output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "congruent",
    version,
    about = "Bayes factors and model-averaged estimates that agree"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Point null against a Beta alternative for x successes in n trials.
    Coin(CoinArgs),
    /// One coin flip, with the Jeffreys-prior intervals alongside.
    SingleFlip(SingleFlipArgs),
    /// Central region against its complement, both with flat priors.
    IntervalNull(IntervalNullArgs),
    /// Cauchy-prior Bayes factor and estimates for a standardized effect size.
    EffectSize(EffectSizeArgs),
    /// Many-coins calibration simulation.
    Calibrate(CalibrateArgs),
    /// Monte Carlo draws from the model-averaged posterior.
    Sample(SampleArgs),
    /// Recompute every reference number, table and figure dataset.
    ReproducePaper(ReproduceArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Directory for report files; without it the summary goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct BinomialModelArgs {
    /// Prior probability of the null model.
    #[arg(long, default_value_t = 0.5)]
    pub prob_m0: f64,
    /// Location of the point null.
    #[arg(long, default_value_t = 0.5)]
    pub theta0: f64,
    /// Beta prior shape α under the alternative.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Beta prior shape β under the alternative.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
}

#[derive(Debug, Clone, Args)]
pub struct CoinArgs {
    #[arg(long)]
    pub x: u64,
    #[arg(long)]
    pub n: u64,
    #[command(flatten)]
    pub model: BinomialModelArgs,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SingleFlipArgs {
    /// 1 for heads, 0 for tails.
    #[arg(long, default_value_t = 0)]
    pub x: u64,
    #[command(flatten)]
    pub model: BinomialModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct IntervalNullArgs {
    #[arg(long)]
    pub x: u64,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 0.5)]
    pub prob_m0: f64,
    /// Lower edge of the null region.
    #[arg(long, default_value_t = 0.45)]
    pub region_low: f64,
    /// Upper edge of the null region.
    #[arg(long, default_value_t = 0.55)]
    pub region_high: f64,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EffectSizeArgs {
    /// Group summaries `n1,mean1,sd1,n2,mean2,sd2`; group 1 is coded −1.
    #[arg(
        long,
        allow_hyphen_values = true,
        conflicts_with = "summary_csv",
        required_unless_present = "summary_csv"
    )]
    pub summary: Option<String>,
    /// CSV with columns group,n,mean,sd and one row per group.
    #[arg(long)]
    pub summary_csv: Option<PathBuf>,
    #[arg(long, default_value_t = 0.707)]
    pub cauchy_scale: f64,
    #[arg(long, default_value_t = 0.5)]
    pub prob_m0: f64,
    #[arg(long, value_enum, default_value = "second-minus-first")]
    pub contrast: ContrastArg,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = congruent::effect::DEFAULT_GRID_SIZE)]
    pub grid_size: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ContrastArg {
    SecondMinusFirst,
    FirstMinusSecond,
}

impl From<ContrastArg> for Contrast {
    fn from(c: ContrastArg) -> Self {
        match c {
            ContrastArg::SecondMinusFirst => Contrast::SecondMinusFirst,
            ContrastArg::FirstMinusSecond => Contrast::FirstMinusSecond,
        }
    }
}

fn default_shards() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub coins: u64,
    #[arg(long, default_value_t = 10)]
    pub flips: u64,
    #[command(flatten)]
    pub model: BinomialModelArgs,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads; the result does not depend on it.
    #[arg(long, default_value_t = default_shards())]
    pub shards: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SamplerArg {
    Composition,
    ProductSpace,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub x: u64,
    #[arg(long)]
    pub n: u64,
    #[command(flatten)]
    pub model: BinomialModelArgs,
    #[arg(long, default_value_t = 1_000_000)]
    pub draws: usize,
    #[arg(long, value_enum, default_value = "product-space")]
    pub sampler: SamplerArg,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    #[arg(long, default_value = "reproduction")]
    pub out: PathBuf,
    /// Coins in the calibration run; tolerances widen by √(10⁶/coins).
    #[arg(long, default_value_t = 1_000_000)]
    pub calibration_coins: u64,
    /// Draws per sampler; tolerances widen by √(10⁶/draws).
    #[arg(long, default_value_t = 1_000_000)]
    pub draws: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = default_shards())]
    pub shards: usize,
}

pub const DEFAULT_SEED: u64 = 20_231_017;

pub fn seed(v: u64) -> Seed {
    Seed(v)
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    /// Reference numbers outside tolerance, one line per item.
    Tolerance(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Tolerance(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Tolerance(items) => {
                writeln!(f, "{} reference value(s) outside tolerance:", items.len())?;
                for item in items {
                    writeln!(f, "  {item}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<congruent::Error> for CliError {
    fn from(e: congruent::Error) -> Self {
        use congruent::Error as E;
        match e {
            E::Domain(_) | E::DegenerateData(_) | E::UnsupportedModel(_) | E::Io(_) => {
                CliError::Usage(e.to_string())
            }
            E::Convergence { .. } | E::UndefinedEvidence(_) | E::DegenerateOdds(_) => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// What a command produced: the summary and any files written.
pub struct Outcome {
    pub summary: Value,
    pub files: Vec<PathBuf>,
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Coin(a) => commands::coin(&a),
        Command::SingleFlip(a) => commands::single_flip(&a),
        Command::IntervalNull(a) => commands::interval_null(&a),
        Command::EffectSize(a) => commands::effect_size(&a),
        Command::Calibrate(a) => commands::calibrate(&a),
        Command::Sample(a) => commands::sample(&a),
        Command::ReproducePaper(a) => reproduce::reproduce(&a),
    }
}
