use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kickcast_core::{OrderingMethod, PredictionTarget};

#[derive(Debug, Parser)]
#[command(name = "kickcast", version, about = "Kick-event behaviour prediction pipeline")]
pub struct Cli {
    /// Seed for every random choice made by the subcommand.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Suppress the summary printed on success.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic kick events.
    Generate(GenerateArgs),
    /// Extract a feature/label dataset from an event directory.
    Extract(ExtractArgs),
    /// Split a dataset into train and test files.
    Split(SplitArgs),
    /// Train one model for one prediction target.
    Train(TrainArgs),
    /// Score a model on a dataset.
    Eval(EvalArgs),
    /// Permutation feature importance of a classification model.
    Importance(ImportanceArgs),
    /// Train and score every (target, method) pair.
    Ablate(AblateArgs),
    /// Win rates and goal averages from a score list.
    Metrics(MetricsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FlavorArg {
    Full,
    Noisy,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub events: usize,
    /// JSON file with observation-noise parameters.
    #[arg(long)]
    pub noise: Option<PathBuf>,
    /// Standard deviation of player placement around the formation, in meters.
    #[arg(long, default_value_t = 8.0)]
    pub spread: f64,
    #[arg(long, default_value_t = 10.0)]
    pub pass_threshold: f64,
    #[arg(long, default_value_t = 7.0)]
    pub dribble_threshold: f64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Event directory written by `generate`.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Ordering method, or `all` for one file per method.
    #[arg(long)]
    pub sort: String,
    #[arg(long, value_enum, default_value_t = FlavorArg::Noisy)]
    pub flavor: FlavorArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long)]
    pub out_train: PathBuf,
    #[arg(long)]
    pub out_test: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainingFlags {
    /// Hidden layer widths, comma separated.
    #[arg(long, default_value = "128,128", value_delimiter = ',')]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    /// Train on raw feature values.
    #[arg(long)]
    pub no_standardize: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub target: PredictionTarget,
    #[command(flatten)]
    pub training: TrainingFlags,
    /// Model file; the training report goes next to it as `<out>.report.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub target: PredictionTarget,
    /// Metric JSON; printed to standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImportanceArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub target: PredictionTarget,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    /// Rows shown in the printed summary.
    #[arg(long, default_value_t = 20)]
    pub top: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Event directory written by `generate`.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Comma-separated ordering methods, or `all`.
    #[arg(long, default_value = "all")]
    pub methods: String,
    /// Comma-separated prediction targets, or `all`.
    #[arg(long, default_value = "all")]
    pub targets: String,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, value_enum, default_value_t = FlavorArg::Noisy)]
    pub flavor: FlavorArg,
    #[command(flatten)]
    pub training: TrainingFlags,
    /// Report JSON; an aligned text table is written next to it as `.txt`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// CSV of `our_goals,their_goals` rows; a header line is optional.
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn parse_methods(text: &str) -> Result<Vec<OrderingMethod>, String> {
    if text == "all" {
        return Ok(OrderingMethod::ALL.to_vec());
    }
    text.split(',').map(|s| s.trim().parse::<OrderingMethod>()).collect()
}

pub fn parse_targets(text: &str) -> Result<Vec<PredictionTarget>, String> {
    if text == "all" {
        return Ok(PredictionTarget::ALL.to_vec());
    }
    text.split(',').map(|s| s.trim().parse::<PredictionTarget>()).collect()
}
