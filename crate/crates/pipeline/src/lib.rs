//! Train-on-synthetic backtesting: fit a GAN to simulated paths, pick the
//! best strategy configuration on its synthetic output, then compare the
//! Sharpe distribution of that configuration on synthetic and on fresh
//! true-process paths.

use serde::{Deserialize, Serialize};
use synthbt_core::backtest::{select_best, sharpe_distribution, GridResult, SharpeSample};
use synthbt_core::evaluation::{
    compare_sharpe_dists, effectiveness, ConfusionMatrix, DistComparison, EffectivenessVerdict,
    DEFAULT_EFFECTIVENESS_THRESHOLD,
};
use synthbt_core::process::simulate;
use synthbt_core::rng::derive_seed;
use synthbt_core::strategy::enumerate_grid;
use synthbt_core::{ProcessSpec, StrategyConfig, StrategyKind};
use synthbt_rgan::{gbm_moment_hook, generate, train, EvalHook, GanConfig, RganError, TrainLog};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pipeline configuration: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] synthbt_core::Error),
    #[error("GAN training diverged after {batches} batches: {reason}")]
    Diverged {
        batches: usize,
        reason: String,
        partial: Box<PartialReport>,
    },
    #[error(transparent)]
    Gan(RganError),
}

impl From<RganError> for PipelineError {
    fn from(e: RganError) -> Self {
        PipelineError::Gan(e)
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

/// What is known about a run that stopped during GAN training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialReport {
    pub config: PipelineConfig,
    pub train_log: TrainLog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub process: ProcessSpec,
    pub strategy: StrategyKind,
    pub gan: GanConfig,
    /// Simulated paths the GAN is trained on.
    pub n_train: usize,
    /// Held-out simulated paths, scored with the selected configuration.
    pub n_test: usize,
    /// Synthetic paths used for strategy selection.
    pub n_synthetic: usize,
    /// Size of each of the two evaluation ensembles (true and synthetic).
    pub n_eval: usize,
    pub threshold: f64,
    /// Histogram bins for the PDF comparison; Freedman–Diaconis when absent.
    pub bins: Option<usize>,
    pub seed: u64,
    /// Paths drawn by the GBM moment hook at each evaluation point.
    pub eval_paths: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            process: ProcessSpec::default_gbm(),
            strategy: StrategyKind::Bh,
            gan: GanConfig::default(),
            n_train: 1000,
            n_test: 200,
            n_synthetic: 1000,
            n_eval: 2000,
            threshold: DEFAULT_EFFECTIVENESS_THRESHOLD,
            bins: None,
            seed: 0,
            eval_paths: 1000,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.process.validate()?;
        self.gan.validate()?;
        let counts = [
            ("n_train", self.n_train),
            ("n_test", self.n_test),
            ("n_synthetic", self.n_synthetic),
            ("n_eval", self.n_eval),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, n)| *n == 0) {
            return Err(PipelineError::Validation(format!("{name} must be at least 1")));
        }
        if !(0.0..1.0).contains(&self.threshold) {
            return Err(PipelineError::Validation("threshold must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Summary of one pipeline run, serializable as the run's JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub config: PipelineConfig,
    /// Set when the generator received no training batches.
    pub untrained_generator: bool,
    pub batches_trained: usize,
    pub train_log: TrainLog,
    pub best_config: StrategyConfig,
    pub best_synthetic_score: f64,
    /// Mean Sharpe of the selected configuration on the held-out true paths.
    pub test_sharpe_mean: Option<f64>,
    pub target_sharpe_mean: Option<f64>,
    pub experimental_sharpe_mean: Option<f64>,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    /// Verdict on synthetic paths.
    pub rgan_verdict: EffectivenessVerdict,
    /// Verdict on fresh true-process paths.
    pub mc_verdict: EffectivenessVerdict,
    pub agreement: bool,
    /// Files written alongside the report, relative to the report's directory.
    pub artifacts: Vec<String>,
}

/// Full output of a run: the report plus the data behind its figures.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub report: PipelineReport,
    pub comparison: DistComparison,
    pub grid: GridResult,
    pub target: SharpeSample,
    pub experimental: SharpeSample,
}

const TRUE_DATA: u64 = 101;
const GAN_SEED: u64 = 102;
const SELECTION_PATHS: u64 = 103;
const TARGET_PATHS: u64 = 104;
const EXPERIMENTAL_PATHS: u64 = 105;
const HOOK_PATHS: u64 = 106;

pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutcome> {
    config.validate()?;
    let steps = config.gan.seq_len;
    let data = simulate(
        &config.process,
        steps,
        config.n_train + config.n_test,
        derive_seed(config.seed, TRUE_DATA),
    )?;
    let (train_set, test_set) = data.split_at(config.n_train)?;

    let gan_config = GanConfig {
        seed: derive_seed(config.seed, GAN_SEED),
        ..config.gan.clone()
    };
    let mut gbm_hook = matches!(config.process, ProcessSpec::Gbm { .. }).then(|| {
        gbm_moment_hook(
            config.process,
            config.eval_paths.max(synthbt_core::evaluation::MIN_PATHS),
            derive_seed(config.seed, HOOK_PATHS),
        )
    });
    let hook = gbm_hook.as_mut().map(|h| h as &mut EvalHook<'_>);
    let (model, train_log) = match train(gan_config, &train_set, hook) {
        Ok(v) => v,
        Err(RganError::Diverged { batches, reason, log }) => {
            return Err(PipelineError::Diverged {
                batches,
                reason,
                partial: Box::new(PartialReport {
                    config: config.clone(),
                    train_log: log,
                }),
            })
        }
        Err(e) => return Err(e.into()),
    };

    let synthetic = generate(
        &model,
        config.n_synthetic,
        steps,
        derive_seed(config.seed, SELECTION_PATHS),
    )?;
    let grid = select_best(&synthetic, &enumerate_grid(config.strategy))?;
    let best = grid.best_config;

    let test = sharpe_distribution(&best, &test_set)?;
    let fresh_true = simulate(
        &config.process,
        steps,
        config.n_eval,
        derive_seed(config.seed, TARGET_PATHS),
    )?;
    let target = sharpe_distribution(&best, &fresh_true)?;
    let fresh_synth = generate(
        &model,
        config.n_eval,
        steps,
        derive_seed(config.seed, EXPERIMENTAL_PATHS),
    )?;
    let experimental = sharpe_distribution(&best, &fresh_synth)?;

    let comparison = compare_sharpe_dists(&target.defined(), &experimental.defined(), config.bins)?;
    let rgan_verdict = effectiveness(&experimental, config.threshold)?;
    let mc_verdict = effectiveness(&target, config.threshold)?;
    let report = PipelineReport {
        config: config.clone(),
        untrained_generator: model.steps_trained == 0,
        batches_trained: model.steps_trained as usize,
        train_log,
        best_config: best,
        best_synthetic_score: grid.best_score,
        test_sharpe_mean: test.mean(),
        target_sharpe_mean: target.mean(),
        experimental_sharpe_mean: experimental.mean(),
        ks_statistic: comparison.ks_statistic,
        ks_p_value: comparison.ks_p_value,
        agreement: rgan_verdict.effective == mc_verdict.effective,
        rgan_verdict,
        mc_verdict,
        artifacts: Vec::new(),
    };
    Ok(PipelineOutcome {
        report,
        comparison,
        grid,
        target,
        experimental,
    })
}

/// Tabulates RGAN verdicts against Monte Carlo verdicts.
pub fn confusion(reports: &[PipelineReport]) -> Result<ConfusionMatrix> {
    if reports.is_empty() {
        return Err(PipelineError::Validation("no pipeline runs to tabulate".into()));
    }
    Ok(ConfusionMatrix::from_pairs(
        reports
            .iter()
            .map(|r| (r.rgan_verdict.effective, r.mc_verdict.effective)),
    ))
}
