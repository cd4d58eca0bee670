use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "wiresecret", version, about = "Secret sharing over noisy broadcast channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lower and upper bounds of the equivalent compound wiretap channel.
    Compound(CompoundArgs),
    /// Layered secrecy rate regions.
    #[command(subcommand)]
    Region(RegionCommand),
    /// Multi-secret sharing over a MISO channel (virtual receivers, t → ∞ limit).
    Miso(MisoArgs),
    /// Exact error probability and leakage of small binning codes.
    Simulate(SimulateArgs),
    /// Closed-form capacities.
    #[command(subcommand)]
    Capacity(CapacityCommand),
    /// Validate an access structure and/or a channel.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct CompoundArgs {
    #[arg(long)]
    pub structure: PathBuf,
    /// DMC broadcast channel.
    #[arg(long)]
    pub channel: PathBuf,
    /// Grid spacing 1/steps for the input law.
    #[arg(long, default_value_t = 16)]
    pub grid: usize,
    /// Search a finite auxiliary alphabet of this size besides U = X.
    #[arg(long, requires = "aux_grid")]
    pub aux_size: Option<usize>,
    #[arg(long, requires = "aux_size")]
    pub aux_grid: Option<usize>,
    /// JSON report path (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum RegionCommand {
    /// Scalar Gaussian region over power allocations.
    Siso(RegionSisoArgs),
    /// MIMO Gaussian region over scaled covariance chains.
    Mimo(RegionMimoArgs),
}

#[derive(Debug, Args)]
pub struct RegionSisoArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub grid: usize,
    /// Comma-separated weights for a weighted boundary search.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long, default_value_t = 3)]
    pub refine_rounds: usize,
    /// CSV of sampled points.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON report of the weighted search (stdout if omitted).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RegionMimoArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub alpha_grid: usize,
    #[arg(long, default_value_t = 0)]
    pub perturbations: usize,
    /// Required when perturbations > 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated weights (default: all ones).
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.1)]
    pub perturbation_scale: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MisoArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub chain: PathBuf,
    /// CSV trace of the doubling sequence.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Ordering-check tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated blocklengths.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Number of codebook seeds per blocklength.
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    /// Master seed.
    #[arg(long)]
    pub seed: u64,
    /// Skip exact error probabilities.
    #[arg(long)]
    pub no_error_prob: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CapacityCommand {
    /// Threshold (k, K) capacity of a Gaussian SISO channel.
    Kk(CapacityKkArgs),
}

#[derive(Debug, Args)]
pub struct CapacityKkArgs {
    /// SISO channel (noise variances need only be positive).
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).multiple(true).args(["structure", "channel"]))]
pub struct ValidateArgs {
    #[arg(long)]
    pub structure: Option<PathBuf>,
    #[arg(long)]
    pub channel: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
