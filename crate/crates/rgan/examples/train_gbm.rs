//! Trains the GAN on simulated GBM paths and prints the training log.
//!
//! Usage: train_gbm [key=value ...] with keys hidden, paths, batches, seed,
//! scaling, lr, glr, beta1, dsteps, every

use std::time::Instant;

use synthbt_core::evaluation::moment_r2;
use synthbt_core::process::{gbm_log_moments, simulate};
use synthbt_core::stats;
use synthbt_core::{PathOrigin, PathSet, ProcessSpec};
use synthbt_rgan::{generate, train, EvalMetrics, GanConfig, GanModel};

fn main() {
    let mut config = GanConfig::default();
    let mut n_paths = 1000usize;
    for arg in std::env::args().skip(1) {
        let (k, v) = arg.split_once('=').expect("arguments are key=value");
        let f: f64 = v.parse().expect("numeric value");
        match k {
            "hidden" => config.hidden_units = f as usize,
            "paths" => n_paths = f as usize,
            "batches" => config.max_batches = f as usize,
            "seed" => config.seed = f as u64,
            "scaling" => config.scaling = f,
            "lr" => config.learning_rate = f,
            "glr" => config.g_learning_rate = Some(f),
            "beta1" => config.beta1 = f,
            "dsteps" => config.d_steps = f as usize,
            "every" => config.eval_every = f as usize,
            other => panic!("unknown argument {other}"),
        }
    }
    let spec = ProcessSpec::default_gbm();
    let data = simulate(&spec, config.seq_len, n_paths, 100 + config.seed).unwrap();
    let (lo, hi) = data.value_range();
    println!("data range [{lo:.4}, {hi:.4}]");
    let hook_spec = spec;
    let mut hook = move |m: &GanModel| {
        let set = generate(m, 1000, m.config.seq_len, 999).unwrap();
        let positive: Vec<_> = set
            .paths()
            .iter()
            .filter(|p| p.values().iter().all(|v| *v > 0.0))
            .cloned()
            .collect();
        let dropped = set.len() - positive.len();
        let (glo, ghi) = set.value_range();
        let fit = PathSet::new(positive, PathOrigin::External { label: "diag".into() })
            .ok()
            .and_then(|sub| moment_r2(&sub, &hook_spec).ok());
        let (a, b) = fit.map_or((None, None), |f| (f.r2_mean, f.r2_var));
        println!("  eval: dropped {dropped}, gen range [{glo:.3}, {ghi:.3}], r2 on positive {a:?} {b:?}");
        if dropped > 0 {
            EvalMetrics::default()
        } else {
            EvalMetrics { r2_mean: a, r2_var: b }
        }
    };
    let start = Instant::now();
    let (model, log) = train(config, &data, Some(&mut hook)).unwrap();
    for r in &log.records {
        println!(
            "{:6} d={:.4} g={:.4} r2_mean={:?} r2_var={:?}",
            r.batches, r.d_loss, r.g_loss, r.r2_mean, r.r2_var
        );
    }
    println!("elapsed {:.1}s", start.elapsed().as_secs_f64());
    let set = generate(&model, 2000, model.config.seq_len, 4242).unwrap();
    println!("   t  gen_mean  real_mean  theory_mean |  gen_var  real_var  theory_var  gen_nonpos");
    for t in 0..=model.config.seq_len {
        let logs = |s: &PathSet| -> (f64, f64, usize) {
            let col = s.column(t);
            let bad = col.iter().filter(|v| **v <= 0.0).count();
            let l: Vec<f64> = col.iter().filter(|v| **v > 0.0).map(|v| v.ln()).collect();
            (stats::mean(&l), stats::sample_variance(&l), bad)
        };
        let (gm, gv, bad) = logs(&set);
        let (rm, rv, _) = logs(&data);
        let (tm, tv) = gbm_log_moments(&spec, t as f64).unwrap();
        println!("{t:4} {gm:9.4} {rm:10.4} {tm:12.4} | {gv:8.4} {rv:9.4} {tv:11.4} {bad:6}");
    }
}
