use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use proxyhpo::hpo::RlConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "proxyhpo", version, about = "Proxy data and proxy networks for segmentation hyper-parameter search")]
pub struct Cli {
    /// JSON object of flag values; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic ellipsoid dataset.
    Synth(SynthArgs),
    /// Convert a manifest of NIfTI-1 volumes into raw volumes.
    Ingest(IngestArgs),
    /// Pairwise similarity matrix over a dataset.
    Pairwise(PairwiseArgs),
    /// Choose a proxy subset by importance score, or at random.
    Select(SelectArgs),
    /// Full and proxy network specifications with parameter counts.
    Netspec(NetspecArgs),
    /// Hyper-parameter search with a grid or a policy-gradient controller.
    Search(SearchArgs),
    /// Compare a proxy search against a full search.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Correlation, distance and speedup in one summary.
    Report(CompareArgs),
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Pearson correlation of per-configuration proxy and full Dice.
    Correlate(CompareArgs),
    /// Relative distance between the estimated hyper-parameters.
    Distance(CompareArgs),
    /// Ratio of full to proxy GPU hours.
    Speedup(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Mi,
    Ncc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Grid,
    Rl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Network {
    Full,
    Proxy,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    /// Number of items.
    #[arg(long)]
    pub n: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// One extent for a cube, or three comma-separated extents.
    #[arg(long, value_delimiter = ',', default_value = "32")]
    pub shape: Vec<usize>,
    /// Geometry jitter in voxels; noise sigma is twice this.
    #[arg(long, default_value_t = 1.0)]
    pub jitter: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct IngestArgs {
    /// Manifest whose locators point at NIfTI-1 files.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Lower bound of the intensity window written to the new manifest.
    #[arg(long, requires = "window_hi", allow_negative_numbers = true)]
    pub window_lo: Option<f64>,
    #[arg(long, requires = "window_lo", allow_negative_numbers = true)]
    pub window_hi: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MeasureArgs {
    #[arg(long, value_enum, default_value_t = Measure::Mi)]
    pub measure: Measure,
    /// Crop to the label bounding box before resampling.
    #[arg(long)]
    pub labelcrop: bool,
    #[arg(long, default_value_t = 32)]
    pub bins: usize,
    /// Odd NCC window extent along every axis.
    #[arg(long, default_value_t = 9)]
    pub window: usize,
    /// Edge length of the canonical cube.
    #[arg(long, default_value_t = 64)]
    pub cube: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PairwiseArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub measure: MeasureArgs,
    /// A `.csv` file, or a directory that receives `pairwise.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SelectArgs {
    /// `id,score` CSV or a pairwise matrix CSV.
    #[arg(long, conflicts_with = "manifest")]
    pub scores: Option<PathBuf>,
    /// Compute scores from this manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub measure: MeasureArgs,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Seed for the random baseline and the train/validation split.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Uniform random subset instead of the lowest scores.
    #[arg(long)]
    pub random: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct NetspecArgs {
    #[arg(long, default_value_t = 5)]
    pub levels: usize,
    #[arg(long, default_value_t = 16)]
    pub base_channels: usize,
    #[arg(long, default_value_t = 2)]
    pub res_blocks: usize,
    #[arg(long, default_value_t = 1)]
    pub in_channels: usize,
    #[arg(long, default_value_t = 2)]
    pub out_channels: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SearchArgs {
    #[arg(long, value_enum, default_value_t = Mode::Grid)]
    pub mode: Mode,
    /// `surrogate` or `exec:<command line>`.
    #[arg(long, default_value = "surrogate")]
    pub trainer: String,
    /// Surrogate noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = 300)]
    pub max_steps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trials of the policy-gradient search.
    #[arg(long, default_value_t = RlConfig::default().n_trials)]
    pub trials: usize,
    #[arg(long, default_value_t = RlConfig::default().alpha)]
    pub alpha: f64,
    #[arg(long, default_value_t = RlConfig::default().baseline_decay)]
    pub baseline_decay: f64,
    /// GPU hours per training item, unit capacity and step.
    #[arg(long, default_value_t = 1e-3)]
    pub cost_scale: f64,
    /// Per-trial timeout of an external trainer, in seconds.
    #[arg(long, default_value_t = 3600.0)]
    pub timeout: f64,
    #[arg(long, value_enum, default_value_t = Network::Full)]
    pub network: Network,
    /// Depth of the proxy network; one of the three schedule depths.
    #[arg(long, default_value_t = 5)]
    pub proxy_levels: usize,
    /// Search space JSON; defaults depend on the mode.
    #[arg(long)]
    pub space: Option<PathBuf>,
    /// Output of `select`; its split is used as is.
    #[arg(long, conflicts_with = "manifest")]
    pub selection: Option<PathBuf>,
    /// Use every item of this manifest, split in half with the seed.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Placeholder training items when no data source is given.
    #[arg(long, default_value_t = 32)]
    pub n_train: usize,
    #[arg(long, default_value_t = 8)]
    pub n_val: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CompareArgs {
    /// Report of the proxy search.
    #[arg(long)]
    pub proxy: Option<PathBuf>,
    /// Report of the full search.
    #[arg(long)]
    pub full: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
