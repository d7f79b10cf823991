use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "dpbayes",
    version,
    about = "Differentially private counting queries with Bayes correction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo comparison of the naive and Bayes estimators over a grid.
    Sweep(SweepArgs),
    /// Answer a noisy counting query over a CSV file.
    Query(QueryArgs),
    /// Closed-form out-of-range probabilities and interval widths.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// TOML file with any of n_values, p_values, epsilon_values, runs, seed, shards.
    /// Flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Database sizes (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<u64>,

    /// Predicate probabilities (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<f64>,

    /// Privacy levels (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,

    #[arg(long)]
    pub runs: Option<u64>,

    /// Falls back to $DPBAYES_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub shards: Option<usize>,

    /// Output CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseHook {
    /// Always draw the median, i.e. zero noise.
    Median,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,

    /// Predicate `<field> <op> <value>` with op one of =, != or in.
    #[arg(long = "where", value_name = "PREDICATE")]
    pub predicate: String,

    #[arg(long)]
    pub eps: f64,

    /// Falls back to $DPBAYES_SEED, then to fresh entropy.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Also print the Bayes-corrected estimate (needs --p and the database size).
    #[arg(long)]
    pub estimate: bool,

    /// Database size assumed by the estimator.
    #[arg(long, conflicts_with = "n_known")]
    pub n: Option<u64>,

    /// Take the database size from the loaded data.
    #[arg(long)]
    pub n_known: bool,

    /// Predicate probability assumed by the estimator.
    #[arg(long)]
    pub p: Option<f64>,

    #[arg(long, hide = true, value_enum)]
    pub noise_hook: Option<NoiseHook>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub n: u64,

    #[arg(long)]
    pub eps: f64,

    /// Single true count to report P* for; without --a, --bounds or
    /// --widths the full P* table is printed.
    #[arg(long)]
    pub a: Option<u64>,

    #[arg(long)]
    pub p: Option<f64>,

    /// Compare the binomial and Laplace 1-sigma interval widths (needs --p).
    #[arg(long)]
    pub widths: bool,

    /// Maximum and minimum of P* over all true counts.
    #[arg(long)]
    pub bounds: bool,
}
