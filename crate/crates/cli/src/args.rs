use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use montemix::shuffle::ShuffleKind;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "montemix",
    version,
    about = "Mixing-time experiments for Thorp and L-reversal shuffles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact evolution on S_n: trajectory, mixing time, contraction.
    Exact(ExactArgs),
    /// Match-process A-uniformity estimates.
    Match(MatchArgs),
    /// Two-card distance kernels and the first-cut estimator.
    #[command(name = "lrev-kernel")]
    LrevKernel(KernelArgs),
    /// Monte Carlo projected TV, retention and scaling sweeps.
    Mc(McArgs),
    /// Run the numbered invariant suite.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads; 0 uses every core. Never changes the output.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Data file; a `.manifest.json` is written beside it. Stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

fn parse_kind(s: &str) -> Result<ShuffleKind, String> {
    s.parse().map_err(|e: montemix::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// thorp_forward, thorp_reverse, lrev_plain or lrev_monte.
    #[arg(long, value_parser = parse_kind)]
    pub model: Option<ShuffleKind>,
    #[arg(long)]
    pub n: usize,
    #[arg(long = "L")]
    pub l: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Steps to record; defaults to the mixing time.
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long, default_value_t = 0.25)]
    pub threshold: f64,
    /// Contraction block length; defaults to ceil(log2 n).
    #[arg(long)]
    pub block: Option<usize>,
    #[arg(long, default_value_t = montemix::exact::DEFAULT_HORIZON)]
    pub horizon: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Preset {
    Thorp,
    Lrev,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub t: Option<usize>,
    /// Fixed cut time T (without a preset).
    #[arg(long = "T")]
    pub cut: Option<usize>,
    /// Thorp preset: card interval I_m and T law; defaults to ceil(log2 n) - 1.
    #[arg(long)]
    pub m: Option<usize>,
    /// L-reversal preset: card interval I_k and time 4^k C n / L^3.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    /// Constant of the L-reversal lower bound; no bound column without it.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Cards to track (comma separated) when no preset picks them.
    #[arg(long, value_delimiter = ',')]
    pub cards: Option<Vec<usize>>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum KernelKind {
    Distance,
    CutStopped,
    Brute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum KernelEstimator {
    /// Write the kernel matrix.
    Kernel,
    /// Monte Carlo first-cut proximity.
    FirstCut,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long = "L")]
    pub l: usize,
    #[arg(long, value_enum, default_value_t = KernelKind::Distance)]
    pub kernel: KernelKind,
    #[arg(long, value_enum, default_value_t = KernelEstimator::Kernel)]
    pub estimator: KernelEstimator,
    /// First-cut starting distances.
    #[arg(long, value_delimiter = ',')]
    pub distances: Option<Vec<usize>>,
    #[arg(long = "m-prime", default_value_t = 0)]
    pub m_prime: usize,
    #[arg(long = "t-prime")]
    pub t_prime: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum McEstimator {
    ProjectedTv,
    Retention,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ProjectionKind {
    SingleCard,
    CardPair,
    RetentionSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum SweepParam {
    #[value(name = "n")]
    #[serde(rename = "n")]
    N,
    #[value(name = "L")]
    #[serde(rename = "L")]
    L,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = McEstimator::ProjectedTv)]
    pub estimator: McEstimator,
    #[arg(long, value_enum, default_value_t = ProjectionKind::SingleCard)]
    pub projection: ProjectionKind,
    /// Tracked cards for the projection.
    #[arg(long, value_delimiter = ',')]
    pub cards: Option<Vec<usize>>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Sweep target for the projected TV.
    #[arg(long, default_value_t = 0.25)]
    pub threshold: f64,
    #[arg(long, value_enum)]
    pub param: Option<SweepParam>,
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1 << 16)]
    pub horizon: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Criteria to run (comma separated); all by default.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<usize>>,
    #[command(flatten)]
    pub common: Common,
}
