//! `synthbt` command-line driver. Every command writes its outputs plus a
//! `manifest.json` run record into `--out-dir`; `replay` re-runs a record
//! and checks that the outputs are byte-identical.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::Parser;

use crate::args::{Cli, Command, GanCommand, ReplayArgs};
use crate::commands::Run;
use crate::error::{usage, CliError, Result};
use crate::manifest::{read_manifest, sha256_file, unix_now, RunManifest, MANIFEST_FILE};

pub use crate::config::ExperimentConfig;
pub use crate::error::CliError as Error;

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                CliError::Usage(String::new()).exit_code()
            } else {
                0
            };
            let _ = e.print();
            return code;
        }
    };
    let recorded = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match run(cli, recorded) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command inside a thread pool of the requested size.
pub fn run(cli: Cli, argv: Vec<String>) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(usage("--workers must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Runtime(e.to_string()))?;
    pool.install(|| dispatch(&cli, argv))
}

const DEFAULT_OUT_DIR: &str = "synthbt-out";

/// Output directory: the flag or environment variable, else the config
/// file's `output_dir`, else the default.
fn out_dir(cli: &Cli) -> Result<PathBuf> {
    if let Some(dir) = &cli.out_dir {
        return Ok(dir.clone());
    }
    let from_config = ExperimentConfig::load_optional(cli.command.config_path())?.output_dir;
    Ok(from_config.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)))
}

fn dispatch(cli: &Cli, argv: Vec<String>) -> Result<()> {
    if let Command::Replay(r) = &cli.command {
        return replay(cli, r);
    }
    let started_at = unix_now();
    let out_dir = out_dir(cli)?;
    let mut run = Run::new(&out_dir)?;
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate_cmd(a, &mut run),
        Command::Backtest(a) => commands::backtest_cmd(a, &mut run),
        Command::Grid(a) => commands::grid_cmd(a, &mut run),
        Command::Heatmap(a) => commands::heatmap_cmd(a, &mut run),
        Command::DemoOverfit(a) => commands::demo_overfit_cmd(a, &mut run),
        Command::Gan(GanCommand::Train(a)) => commands::gan_train_cmd(a, &mut run),
        Command::Gan(GanCommand::Sample(a)) => commands::gan_sample_cmd(a, &mut run),
        Command::Gan(GanCommand::Eval(a)) => commands::gan_eval_cmd(a, &mut run),
        Command::Pipeline(a) => commands::pipeline_cmd(a, &mut run),
        Command::Replay(_) => unreachable!("handled above"),
    };
    // Failed runs keep a record of whatever they wrote.
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        argv,
        config: run.config.clone(),
        seed: run.seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        working_dir: std::env::current_dir()
            .map(|d| d.display().to_string())
            .unwrap_or_default(),
        inputs: run.inputs.clone(),
        outputs: run.outputs.digests()?,
        started_at,
        finished_at: unix_now(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(out_dir.join(MANIFEST_FILE), text)?;
    result
}

fn replay(cli: &Cli, args: &ReplayArgs) -> Result<()> {
    let original = read_manifest(&args.manifest)?;
    for input in &original.inputs {
        let now = sha256_file(Path::new(&input.path))
            .map_err(|_| CliError::Validation(format!("input {} is no longer readable", input.path)))?;
        if now != input.sha256 {
            return Err(CliError::Validation(format!(
                "input {} changed since the recorded run",
                input.path
            )));
        }
    }
    let argv = std::iter::once("synthbt".to_string()).chain(original.argv.iter().cloned());
    let mut replayed =
        Cli::try_parse_from(argv).map_err(|e| CliError::Validation(format!("recorded arguments: {e}")))?;
    if matches!(replayed.command, Command::Replay(_)) {
        return Err(usage("cannot replay a replay"));
    }
    let target = out_dir(cli)?;
    if std::path::absolute(out_dir(&replayed)?)? == std::path::absolute(&target)? {
        return Err(usage("replay needs an --out-dir different from the recorded run's"));
    }
    replayed.out_dir = Some(target.clone());
    replayed.workers = cli.workers.or(replayed.workers);
    dispatch(&replayed, original.argv.clone())?;

    let fresh = read_manifest(&target.join(MANIFEST_FILE))?;
    if fresh.outputs == original.outputs {
        println!("replay matched {} output files", fresh.outputs.len());
        Ok(())
    } else {
        let differing: Vec<_> = original
            .outputs
            .iter()
            .filter(|o| !fresh.outputs.contains(o))
            .map(|o| o.path.as_str())
            .collect();
        Err(CliError::Runtime(format!(
            "replay outputs differ: {}",
            differing.join(", ")
        )))
    }
}
