use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use synthbt_core::backtest::{backtest, mac_heatmap, select_best, sharpe_distribution, split_is_oos};
use synthbt_core::evaluation::{moment_r2, normality_test, MomentFit, NormalityReport};
use synthbt_core::process::{read_csv, sidecar_path, simulate, write_csv};
use synthbt_core::rng::derive_seed;
use synthbt_core::strategy::enumerate_grid;
use synthbt_core::{PathOrigin, PathSet, ProcessSpec, StrategyConfig, StrategyKind};
use synthbt_pipeline::{confusion, run_pipeline, PartialReport, PipelineConfig, PipelineError, PipelineReport};
use synthbt_rgan::{
    gbm_moment_hook, generate, load_checkpoint, save_checkpoint, train, EvalHook, GanConfig, RganError,
};

use crate::args::*;
use crate::config::ExperimentConfig;
use crate::error::{usage, CliError, Result};
use crate::manifest::{sha256_file, FileDigest, Outputs};

/// Default pipeline repetitions per invocation.
pub const DEFAULT_RUNS: usize = 10;

const DATA_LABEL: u64 = 1;
const EVAL_LABEL: u64 = 2;

/// State shared by a command while it runs: where outputs go, which inputs
/// were read and the resolved settings echoed into the manifest.
pub struct Run {
    pub outputs: Outputs,
    pub inputs: Vec<FileDigest>,
    pub config: serde_json::Value,
    pub seed: u64,
}

impl Run {
    pub fn new(out_dir: &Path) -> Result<Self> {
        Ok(Run {
            outputs: Outputs::new(out_dir)?,
            inputs: Vec::new(),
            config: serde_json::Value::Null,
            seed: 0,
        })
    }

    fn record_input(&mut self, path: &Path) -> Result<()> {
        let abs = std::path::absolute(path)?;
        self.inputs.push(FileDigest {
            sha256: sha256_file(&abs)?,
            path: abs.display().to_string(),
        });
        Ok(())
    }

    fn read_paths(&mut self, path: &Path) -> Result<PathSet> {
        self.record_input(path)?;
        let side = sidecar_path(path);
        if side.exists() {
            self.record_input(&side)?;
        }
        Ok(read_csv(path)?)
    }

    fn write_paths(&mut self, name: &str, set: &PathSet) -> Result<()> {
        let csv = self.outputs.path(name);
        let meta = sidecar_path(Path::new(name));
        self.outputs.path(&meta.to_string_lossy());
        Ok(write_csv(set, &csv)?)
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.outputs.path(name))?))
    }

    fn echo<T: Serialize>(&mut self, resolved: &T, seed: u64) -> Result<()> {
        self.config = serde_json::to_value(resolved)?;
        self.seed = seed;
        Ok(())
    }
}

fn default_spec(kind: ProcessKind) -> ProcessSpec {
    match kind {
        ProcessKind::RandomWalk => ProcessSpec::random_walk(1.0),
        ProcessKind::WhiteNoise => ProcessSpec::white_noise(1.0),
        ProcessKind::Gbm => ProcessSpec::default_gbm(),
        ProcessKind::Ar2 => ProcessSpec::default_ar2(),
    }
}

fn kind_of(spec: &ProcessSpec) -> ProcessKind {
    match spec {
        ProcessSpec::RandomWalk { .. } => ProcessKind::RandomWalk,
        ProcessSpec::WhiteNoise { .. } => ProcessKind::WhiteNoise,
        ProcessSpec::Gbm { .. } => ProcessKind::Gbm,
        ProcessSpec::Ar2 { .. } => ProcessKind::Ar2,
    }
}

fn set(slot: &mut f64, flag: Option<f64>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

/// Flags override the config file's process, which overrides `fallback`.
/// Choosing a different kind by flag starts from that kind's defaults.
pub fn resolve_process(config: Option<&ProcessSpec>, args: &ProcessArgs, fallback: ProcessSpec) -> Result<ProcessSpec> {
    let base = config.copied().unwrap_or(fallback);
    let mut spec = match args.process {
        Some(k) if k != kind_of(&base) => default_spec(k),
        _ => base,
    };
    let label = spec.label();
    let reject = |name: &str, given: Option<f64>| match given {
        Some(_) => Err(usage(format!("--{name} does not apply to process {label}"))),
        None => Ok(()),
    };
    match &mut spec {
        ProcessSpec::RandomWalk { sigma, p0 } => {
            set(sigma, args.sigma);
            set(p0, args.p0);
            for (n, v) in [
                ("mu", args.mu),
                ("y0", args.y0),
                ("a", args.a),
                ("b", args.b),
                ("c", args.c),
            ] {
                reject(n, v)?;
            }
        }
        ProcessSpec::WhiteNoise { sigma } => {
            set(sigma, args.sigma);
            for (n, v) in [
                ("mu", args.mu),
                ("y0", args.y0),
                ("a", args.a),
                ("b", args.b),
                ("c", args.c),
                ("p0", args.p0),
            ] {
                reject(n, v)?;
            }
        }
        ProcessSpec::Gbm { mu, sigma, y0 } => {
            set(mu, args.mu);
            set(sigma, args.sigma);
            set(y0, args.y0);
            for (n, v) in [("a", args.a), ("b", args.b), ("c", args.c), ("p0", args.p0)] {
                reject(n, v)?;
            }
        }
        ProcessSpec::Ar2 { a, b, c, sigma, p0, .. } => {
            set(a, args.a);
            set(b, args.b);
            set(c, args.c);
            set(sigma, args.sigma);
            set(p0, args.p0);
            for (n, v) in [("mu", args.mu), ("y0", args.y0)] {
                reject(n, v)?;
            }
        }
    }
    spec.validate()?;
    Ok(spec)
}

fn load_config(path: Option<&Path>, run: &mut Run) -> Result<ExperimentConfig> {
    if let Some(p) = path {
        run.record_input(p)?;
    }
    ExperimentConfig::load_optional(path)
}

fn nan_or(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

pub fn simulate_cmd(args: &SimulateArgs, run: &mut Run) -> Result<()> {
    let cfg = load_config(args.config.as_deref(), run)?;
    let spec = resolve_process(cfg.process.as_ref(), &args.process, ProcessSpec::default_gbm())?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let resolved = json!({"process": spec, "steps": args.steps, "paths": args.paths, "seed": seed});
    run.echo(&resolved, seed)?;
    let set = simulate(&spec, args.steps, args.paths, seed)?;
    run.write_paths("paths.csv", &set)?;
    println!(
        "simulated {} {} paths of {} steps",
        set.len(),
        spec.label(),
        set.steps()
    );
    Ok(())
}

/// Reads `--input` or simulates paths from the resolved process.
fn input_paths(args: &InputArgs, cfg: &ExperimentConfig, run: &mut Run) -> Result<(PathSet, serde_json::Value, u64)> {
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    match &args.input {
        Some(p) => {
            let set = run.read_paths(p)?;
            Ok((set, json!({"input": p}), seed))
        }
        None => {
            let spec = resolve_process(cfg.process.as_ref(), &args.process, ProcessSpec::random_walk(1.0))?;
            let set = simulate(&spec, args.steps, args.paths, seed)?;
            let resolved = json!({"process": spec, "steps": args.steps, "paths": args.paths});
            Ok((set, resolved, seed))
        }
    }
}

pub fn backtest_cmd(args: &BacktestArgs, run: &mut Run) -> Result<()> {
    let cfg = load_config(args.config.as_deref(), run)?;
    let strategy: StrategyConfig =
        serde_json::from_str(&args.strategy).map_err(|e| usage(format!("--strategy: {e}")))?;
    strategy.validate()?;
    let (set, data, seed) = input_paths(&args.input, &cfg, run)?;
    run.echo(&json!({"data": data, "strategy": strategy, "seed": seed}), seed)?;
    let reports: Vec<_> = set
        .paths()
        .par_iter()
        .map(|p| backtest(p, &strategy))
        .collect::<std::result::Result<_, _>>()?;

    let mut w = run.create("backtest.csv")?;
    writeln!(w, "path_id,sharpe,total_pnl,n_trades")?;
    for (i, r) in reports.iter().enumerate() {
        writeln!(w, "{i},{:?},{:?},{}", nan_or(r.sharpe), r.total_pnl(), r.n_trades)?;
    }
    w.flush()?;
    let mut w = run.create("equity.csv")?;
    writeln!(w, "path_id,t,equity")?;
    for (i, r) in reports.iter().enumerate() {
        for (t, e) in r.equity.iter().enumerate() {
            writeln!(w, "{i},{t},{e:?}")?;
        }
    }
    w.flush()?;
    println!("backtested {strategy} on {} paths", reports.len());
    Ok(())
}

pub fn grid_cmd(args: &GridArgs, run: &mut Run) -> Result<()> {
    let cfg = load_config(args.config.as_deref(), run)?;
    let kind = args
        .strategy
        .or(cfg.strategy)
        .ok_or_else(|| usage("--strategy (mac or bh) is required"))?;
    let (set, data, seed) = input_paths(&args.input, &cfg, run)?;
    run.echo(&json!({"data": data, "strategy": kind, "seed": seed}), seed)?;
    let grid = enumerate_grid(kind);
    let result = select_best(&set, &grid)?;
    result.write_csv(run.create("grid.csv")?)?;
    run.outputs.write_json(
        "best.json",
        &json!({
            "best_config": result.best_config,
            "best_score": result.best_score,
            "n_paths": set.len(),
            "n_configs": grid.len(),
        }),
    )?;
    println!("best {} with mean Sharpe {:.6}", result.best_config, result.best_score);
    Ok(())
}

pub fn heatmap_cmd(args: &HeatmapArgs, run: &mut Run) -> Result<()> {
    let spec = match args.process {
        ProcessKind::RandomWalk => ProcessSpec::random_walk(args.sigma),
        ProcessKind::WhiteNoise => ProcessSpec::white_noise(args.sigma),
        _ => return Err(usage("heatmap supports --process random-walk or white-noise")),
    };
    spec.validate()?;
    run.echo(
        &json!({"process": spec, "steps": args.steps, "seed": args.seed}),
        args.seed,
    )?;
    let set = simulate(&spec, args.steps, 1, args.seed)?;
    let matrix = mac_heatmap(&set.paths()[0])?;
    matrix.write_csv(run.create("heatmap.csv")?)?;
    let smoothness = matrix.smoothness();
    run.outputs.write_json(
        "heatmap.json",
        &json!({"process": spec, "steps": args.steps, "smoothness": smoothness}),
    )?;
    println!("{} heatmap smoothness {:?}", spec.label(), smoothness);
    Ok(())
}

#[derive(Debug, Serialize)]
struct OverfitSummary {
    best_config: StrategyConfig,
    is_sharpe: Option<f64>,
    oos_sharpe: Option<f64>,
    eval_paths: usize,
    eval_steps: usize,
    eval_defined: usize,
    eval_mean: Option<f64>,
    eval_std_error: Option<f64>,
    /// Whether the evaluation mean lies within three standard errors of zero.
    eval_mean_near_zero: Option<bool>,
}

pub fn demo_overfit_cmd(args: &DemoArgs, run: &mut Run) -> Result<()> {
    let spec = ProcessSpec::random_walk(args.sigma);
    spec.validate()?;
    let eval_steps = args.eval_steps.unwrap_or(args.split);
    run.echo(
        &json!({
            "process": spec, "steps": args.steps, "split": args.split, "strategy": args.strategy,
            "eval_paths": args.eval_paths, "eval_steps": eval_steps, "seed": args.seed,
        }),
        args.seed,
    )?;
    let history = simulate(&spec, args.steps, 1, derive_seed(args.seed, DATA_LABEL))?;
    let (is, oos) = split_is_oos(&history.paths()[0], args.split)?;
    let is_set = PathSet::new(vec![is.clone()], history.origin().clone())?;
    let best = select_best(&is_set, &enumerate_grid(args.strategy))?.best_config;
    let is_report = backtest(&is, &best)?;
    let oos_report = backtest(&oos, &best)?;

    let eval = simulate(&spec, eval_steps, args.eval_paths, derive_seed(args.seed, EVAL_LABEL))?;
    let sample = sharpe_distribution(&best, &eval)?;

    let mut w = run.create("equity.csv")?;
    writeln!(w, "segment,t,equity")?;
    for (t, e) in is_report.equity.iter().enumerate() {
        writeln!(w, "is,{t},{e:?}")?;
    }
    for (t, e) in oos_report.equity.iter().enumerate() {
        writeln!(w, "oos,{},{e:?}", t + args.split)?;
    }
    w.flush()?;
    let mut w = run.create("sharpe_distribution.csv")?;
    writeln!(w, "path_id,sharpe")?;
    for (i, s) in sample.per_path.iter().enumerate() {
        writeln!(w, "{i},{:?}", nan_or(*s))?;
    }
    w.flush()?;
    let (mean, se) = (sample.mean(), sample.std_error());
    let summary = OverfitSummary {
        best_config: best,
        is_sharpe: is_report.sharpe,
        oos_sharpe: oos_report.sharpe,
        eval_paths: args.eval_paths,
        eval_steps,
        eval_defined: sample.len() - sample.n_undefined(),
        eval_mean: mean,
        eval_std_error: se,
        eval_mean_near_zero: mean.zip(se).map(|(m, s)| m.abs() <= 3.0 * s),
    };
    run.outputs.write_json("overfit.json", &summary)?;
    println!(
        "best in-sample {best}: IS Sharpe {:?}, OOS Sharpe {:?}, evaluation mean {:?}",
        summary.is_sharpe, summary.oos_sharpe, summary.eval_mean
    );
    Ok(())
}

/// Applies flag overrides to a GAN configuration.
pub fn apply_gan_args(mut gan: GanConfig, args: &GanArgs) -> GanConfig {
    macro_rules! over {
        ($($f:ident),*) => { $( if let Some(v) = args.$f { gan.$f = v; } )* };
    }
    over!(
        hidden_units,
        seq_len,
        batch_size,
        scaling,
        learning_rate,
        beta1,
        beta2,
        d_steps,
        max_batches,
        eval_every
    );
    if args.g_learning_rate.is_some() {
        gan.g_learning_rate = args.g_learning_rate;
    }
    if args.early_stop.is_some() {
        gan.early_stop = args.early_stop;
    }
    if args.no_early_stop {
        gan.early_stop = None;
    }
    gan
}

#[derive(Debug, Serialize)]
struct TrainSummary<'a> {
    config: &'a GanConfig,
    data: serde_json::Value,
    batches_trained: usize,
    final_record: Option<&'a synthbt_rgan::TrainRecord>,
    best_r2: Option<(usize, f64, f64)>,
    error: Option<String>,
}

pub fn gan_train_cmd(args: &GanTrainArgs, run: &mut Run) -> Result<()> {
    let cfg = load_config(args.config.as_deref(), run)?;
    let data_cfg = cfg.data.clone().unwrap_or_default();
    let seed = args.seed.or(cfg.seed).or(cfg.gan.as_ref().map(|g| g.seed)).unwrap_or(0);
    let mut gan = apply_gan_args(cfg.gan.clone().unwrap_or_default(), &args.gan);
    gan.seed = seed;
    gan.validate()?;

    let input = args.input.clone().or(data_cfg.paths.clone());
    let explicit_process = args.process.process.is_some() || cfg.process.is_some();
    let spec = resolve_process(cfg.process.as_ref(), &args.process, ProcessSpec::default_gbm())?;
    let (data, data_desc, reference) = match &input {
        Some(p) => {
            let set = run.read_paths(p)?;
            (set, json!({"input": p}), explicit_process.then_some(spec))
        }
        None => {
            let n = args.paths.or(data_cfg.n_paths).unwrap_or(1000);
            let data_seed = data_cfg.seed.unwrap_or_else(|| derive_seed(seed, DATA_LABEL));
            let set = simulate(&spec, gan.seq_len, n, data_seed)?;
            (set, json!({"process": spec, "paths": n, "seed": data_seed}), Some(spec))
        }
    };
    run.echo(
        &json!({"gan": gan, "data": data_desc, "eval_paths": args.eval_paths}),
        seed,
    )?;

    let mut gbm_hook = reference
        .filter(|s| matches!(s, ProcessSpec::Gbm { .. }))
        .map(|s| gbm_moment_hook(s, args.eval_paths, derive_seed(seed, EVAL_LABEL)));
    let hook = gbm_hook.as_mut().map(|h| h as &mut EvalHook<'_>);
    let (model, log, error) = match train(gan.clone(), &data, hook) {
        Ok((m, l)) => (Some(m), l, None),
        Err(RganError::Diverged { batches, reason, log }) => (
            None,
            log,
            Some(format!("training diverged after {batches} batches: {reason}")),
        ),
        Err(e) => return Err(e.into()),
    };
    log.write_csv(run.create("train_log.csv")?)?;
    if let Some(m) = &model {
        let dir = run.outputs.dir().join("checkpoint");
        save_checkpoint(m, &dir)?;
        run.outputs.path("checkpoint/manifest.json");
        run.outputs.path("checkpoint/params.bin");
    }
    let summary = TrainSummary {
        config: &gan,
        data: data_desc,
        batches_trained: model.as_ref().map_or(0, |m| m.steps_trained as usize),
        final_record: log.last(),
        best_r2: log.best(),
        error: error.clone(),
    };
    run.outputs.write_json("train.json", &summary)?;
    match error {
        Some(e) => Err(CliError::Runtime(e)),
        None => {
            println!("trained {} batches", summary.batches_trained);
            Ok(())
        }
    }
}

pub fn gan_sample_cmd(args: &GanSampleArgs, run: &mut Run) -> Result<()> {
    let model = load_checkpoint_recorded(&args.checkpoint, run)?;
    let steps = args.steps.unwrap_or(model.config.seq_len);
    run.echo(
        &json!({"checkpoint": args.checkpoint, "paths": args.paths, "steps": steps, "seed": args.seed}),
        args.seed,
    )?;
    let set = with_checkpoint_origin(generate(&model, args.paths, steps, args.seed)?, &args.checkpoint)?;
    run.write_paths("paths.csv", &set)?;
    if steps > model.config.seq_len {
        eprintln!(
            "warning: {steps} steps exceed the trained length {}; values beyond it are extrapolated",
            model.config.seq_len
        );
    }
    println!("sampled {} paths of {steps} steps", set.len());
    Ok(())
}

fn load_checkpoint_recorded(dir: &Path, run: &mut Run) -> Result<synthbt_rgan::GanModel> {
    for f in [
        synthbt_rgan::checkpoint::MANIFEST_FILE,
        synthbt_rgan::checkpoint::PARAMS_FILE,
    ] {
        let p = dir.join(f);
        if !p.exists() {
            return Err(CliError::Validation(format!(
                "checkpoint file {} is missing",
                p.display()
            )));
        }
        run.record_input(&p)?;
    }
    Ok(load_checkpoint(dir)?)
}

fn with_checkpoint_origin(set: PathSet, dir: &Path) -> Result<PathSet> {
    let origin = match set.origin().clone() {
        PathOrigin::Generator { seed, extrapolated, .. } => PathOrigin::Generator {
            checkpoint: Some(dir.display().to_string()),
            seed,
            extrapolated,
        },
        other => other,
    };
    Ok(PathSet::new(set.into_paths(), origin)?)
}

#[derive(Debug, Serialize)]
struct EvalSummary {
    reference: ProcessSpec,
    n_paths: usize,
    steps: usize,
    r2_mean: Option<f64>,
    r2_var: Option<f64>,
    moment_fit: MomentFit,
    normality: NormalityReport,
}

pub fn gan_eval_cmd(args: &GanEvalArgs, run: &mut Run) -> Result<()> {
    let base = ProcessSpec::default_gbm();
    let reference = resolve_process(
        Some(&base),
        &ProcessArgs {
            mu: args.mu,
            sigma: args.sigma,
            y0: args.y0,
            ..ProcessArgs::default()
        },
        base,
    )?;
    run.echo(
        &json!({
            "input": args.input, "checkpoint": args.checkpoint, "paths": args.paths,
            "seed": args.seed, "reference": reference, "alpha": args.alpha,
        }),
        args.seed,
    )?;
    let set = match (&args.input, &args.checkpoint) {
        (Some(p), _) => run.read_paths(p)?,
        (None, Some(dir)) => {
            let model = load_checkpoint_recorded(dir, run)?;
            with_checkpoint_origin(generate(&model, args.paths, model.config.seq_len, args.seed)?, dir)?
        }
        (None, None) => return Err(usage("one of --input or --checkpoint is required")),
    };
    let fit = moment_r2(&set, &reference)?;
    let normality = normality_test(&set, &reference, args.alpha)?;
    let summary = EvalSummary {
        reference,
        n_paths: set.len(),
        steps: set.steps(),
        r2_mean: fit.r2_mean,
        r2_var: fit.r2_var,
        moment_fit: fit,
        normality,
    };
    run.outputs.write_json("eval.json", &summary)?;
    println!(
        "r2_mean {:?}, r2_var {:?}, normality passed {}",
        summary.r2_mean, summary.r2_var, summary.normality.passed
    );
    Ok(())
}

/// Per-run result file contents when a run fails.
#[derive(Debug, Serialize)]
struct FailedRun {
    run: usize,
    seed: u64,
    error: String,
    partial: Option<PartialReport>,
}

#[derive(Debug, Serialize)]
struct PipelineSummary {
    runs: usize,
    succeeded: Vec<usize>,
    failed: Vec<usize>,
    confusion: Option<synthbt_core::evaluation::ConfusionMatrix>,
    agreements: Option<usize>,
    rgan_negative: Option<usize>,
}

pub fn resolve_pipeline(args: &PipelineArgs, cfg: &ExperimentConfig) -> Result<(PipelineConfig, usize)> {
    let section = cfg.pipeline.clone().unwrap_or_default();
    let runs = args.runs.or(section.runs).unwrap_or(DEFAULT_RUNS);
    if runs == 0 {
        return Err(usage("--runs must be at least 1"));
    }
    let defaults = PipelineConfig::default();
    let process = resolve_process(cfg.process.as_ref(), &args.process, defaults.process)?;
    let config = PipelineConfig {
        process,
        strategy: args.strategy.or(cfg.strategy).unwrap_or(StrategyKind::Bh),
        gan: apply_gan_args(cfg.gan.clone().unwrap_or_default(), &args.gan),
        n_train: args.n_train.or(section.n_train).unwrap_or(defaults.n_train),
        n_test: args.n_test.or(section.n_test).unwrap_or(defaults.n_test),
        n_synthetic: args.n_synthetic.or(section.n_synthetic).unwrap_or(defaults.n_synthetic),
        n_eval: args.n_eval.or(section.n_eval).unwrap_or(defaults.n_eval),
        threshold: args.threshold.or(section.threshold).unwrap_or(defaults.threshold),
        bins: args.bins.or(section.bins),
        seed: args.seed.or(cfg.seed).unwrap_or(0),
        eval_paths: args.eval_paths.or(section.eval_paths).unwrap_or(defaults.eval_paths),
    };
    config.validate()?;
    Ok((config, runs))
}

/// Seed of run `i` under a master seed.
pub fn run_seed(master: u64, i: usize) -> u64 {
    derive_seed(master, 1000 + i as u64)
}

pub fn pipeline_cmd(args: &PipelineArgs, run: &mut Run) -> Result<()> {
    let cfg = load_config(args.config.as_deref(), run)?;
    let (config, runs) = resolve_pipeline(args, &cfg)?;
    run.echo(&json!({"pipeline": config, "runs": runs}), config.seed)?;
    let results: Vec<_> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let c = PipelineConfig {
                seed: run_seed(config.seed, i),
                ..config.clone()
            };
            (i, c.seed, run_pipeline(&c))
        })
        .collect();

    let mut reports: Vec<PipelineReport> = Vec::new();
    let (mut succeeded, mut failed) = (Vec::new(), Vec::new());
    for (i, seed, result) in results {
        let stem = format!("run_{i:03}");
        match result {
            Ok(outcome) => {
                let mut report = outcome.report;
                report.artifacts = vec![format!("{stem}_cdf.csv"), format!("{stem}_pdf.csv")];
                outcome.comparison.write_cdf_csv(run.create(&report.artifacts[0])?)?;
                outcome.comparison.write_pdf_csv(run.create(&report.artifacts[1])?)?;
                run.outputs.write_json(&format!("{stem}.json"), &report)?;
                reports.push(report);
                succeeded.push(i);
            }
            Err(e) => {
                let partial = match &e {
                    PipelineError::Diverged { partial, .. } => Some((**partial).clone()),
                    _ => None,
                };
                eprintln!("run {i} failed: {e}");
                let failure = FailedRun {
                    run: i,
                    seed,
                    error: e.to_string(),
                    partial,
                };
                run.outputs.write_json(&format!("{stem}.json"), &failure)?;
                failed.push(i);
            }
        }
    }
    let matrix = (!reports.is_empty()).then(|| confusion(&reports)).transpose()?;
    if let Some(m) = &matrix {
        m.write_csv(run.create("confusion.csv")?)?;
    }
    let summary = PipelineSummary {
        runs,
        succeeded,
        failed,
        confusion: matrix,
        agreements: matrix.map(|m| m.agreements()),
        rgan_negative: matrix.map(|m| m.rgan_negative()),
    };
    run.outputs.write_json("pipeline.json", &summary)?;
    match matrix {
        Some(m) => {
            println!(
                "{} of {runs} runs completed; {} agreements, {} negative generator verdicts",
                m.total(),
                m.agreements(),
                m.rgan_negative()
            );
            Ok(())
        }
        None => Err(CliError::Runtime(format!("all {runs} pipeline runs failed"))),
    }
}
