use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use synthbt_core::StrategyKind;

#[derive(Debug, Clone, Parser)]
#[command(name = "synthbt", version, about = "Backtesting on synthetic price paths")]
pub struct Cli {
    /// Directory receiving the command's outputs and manifest. Falls back to
    /// the config file's `output_dir`, then to `synthbt-out`.
    #[arg(long, global = true, env = "SYNTHBT_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Simulate an ensemble of price paths.
    Simulate(SimulateArgs),
    /// Backtest one strategy configuration on each path.
    Backtest(BacktestArgs),
    /// Score a full parameter grid and pick the best configuration.
    Grid(GridArgs),
    /// Sharpe ratio of every moving-average-cross pair on one path.
    Heatmap(HeatmapArgs),
    /// Pick the best in-sample configuration on one path and check it out of sample.
    DemoOverfit(DemoArgs),
    /// Train, sample and evaluate the GAN.
    #[command(subcommand)]
    Gan(GanCommand),
    /// Repeated train-on-synthetic strategy evaluation.
    Pipeline(Box<PipelineArgs>),
    /// Re-run a recorded command into a new directory and compare outputs.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Subcommand)]
pub enum GanCommand {
    Train(Box<GanTrainArgs>),
    Sample(GanSampleArgs),
    Eval(GanEvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProcessKind {
    RandomWalk,
    WhiteNoise,
    Gbm,
    Ar2,
}

/// Process selection; unset parameters keep the process defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct ProcessArgs {
    #[arg(long, value_enum)]
    pub process: Option<ProcessKind>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub y0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// Initial value of a random walk or AR(2) path.
    #[arg(long, allow_negative_numbers = true)]
    pub p0: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub process: ProcessArgs,
    #[arg(long, default_value_t = 30)]
    pub steps: usize,
    #[arg(long, default_value_t = 1000)]
    pub paths: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Paths read from a CSV file, or simulated when no file is given.
#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Path-set CSV to read instead of simulating.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub process: ProcessArgs,
    #[arg(long, default_value_t = 600)]
    pub steps: usize,
    #[arg(long, default_value_t = 1)]
    pub paths: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct BacktestArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub input: InputArgs,
    /// Strategy configuration as JSON, e.g. {"kind":"mac","p1":5,"p2":20}.
    #[arg(long)]
    pub strategy: String,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub strategy: Option<StrategyKind>,
}

#[derive(Debug, Clone, Args)]
pub struct HeatmapArgs {
    #[arg(long, value_enum, default_value = "random-walk")]
    pub process: ProcessKind,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 600)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 600)]
    pub steps: usize,
    /// Index of the last in-sample price.
    #[arg(long, default_value_t = 300)]
    pub split: usize,
    #[arg(long, default_value = "bh")]
    pub strategy: StrategyKind,
    #[arg(long, default_value_t = 2000)]
    pub eval_paths: usize,
    /// Steps of each evaluation path; defaults to the in-sample length.
    #[arg(long)]
    pub eval_steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// GAN hyperparameters that override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct GanArgs {
    #[arg(long)]
    pub hidden_units: Option<usize>,
    #[arg(long)]
    pub seq_len: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub scaling: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Adam first-moment decay for both networks.
    #[arg(long)]
    pub beta1: Option<f64>,
    /// Adam second-moment decay for both networks.
    #[arg(long)]
    pub beta2: Option<f64>,
    /// Generator learning rate when it differs from the discriminator's.
    #[arg(long)]
    pub g_learning_rate: Option<f64>,
    /// Discriminator updates per generator update.
    #[arg(long)]
    pub d_steps: Option<usize>,
    #[arg(long)]
    pub max_batches: Option<usize>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    /// Stop once both R² values reach this level.
    #[arg(long, conflicts_with = "no_early_stop")]
    pub early_stop: Option<f64>,
    #[arg(long)]
    pub no_early_stop: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GanTrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Training paths CSV; simulated from the process when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub process: ProcessArgs,
    #[command(flatten)]
    pub gan: GanArgs,
    /// Number of simulated training paths.
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Paths drawn at each evaluation point (GBM data only).
    #[arg(long, default_value_t = 1000)]
    pub eval_paths: usize,
}

#[derive(Debug, Clone, Args)]
pub struct GanSampleArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub paths: usize,
    /// Steps per path; defaults to the trained length.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct GanEvalArgs {
    /// Path-set CSV to evaluate.
    #[arg(long, conflicts_with = "checkpoint", required_unless_present = "checkpoint")]
    pub input: Option<PathBuf>,
    /// Checkpoint to sample from instead of reading a CSV.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Reference GBM drift, volatility and start value.
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub y0: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub process: ProcessArgs,
    #[arg(long)]
    pub strategy: Option<StrategyKind>,
    #[command(flatten)]
    pub gan: GanArgs,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    #[arg(long)]
    pub n_synthetic: Option<usize>,
    #[arg(long)]
    pub n_eval: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub eval_paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Manifest written by the original run.
    #[arg(long)]
    pub manifest: PathBuf,
}

impl Command {
    /// The `--config` file of commands that take one.
    pub fn config_path(&self) -> Option<&Path> {
        match self {
            Command::Simulate(a) => a.config.as_deref(),
            Command::Backtest(a) => a.config.as_deref(),
            Command::Grid(a) => a.config.as_deref(),
            Command::Gan(GanCommand::Train(a)) => a.config.as_deref(),
            Command::Pipeline(a) => a.config.as_deref(),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Backtest(_) => "backtest",
            Command::Grid(_) => "grid",
            Command::Heatmap(_) => "heatmap",
            Command::DemoOverfit(_) => "demo-overfit",
            Command::Gan(GanCommand::Train(_)) => "gan train",
            Command::Gan(GanCommand::Sample(_)) => "gan sample",
            Command::Gan(GanCommand::Eval(_)) => "gan eval",
            Command::Pipeline(_) => "pipeline",
            Command::Replay(_) => "replay",
        }
    }
}
