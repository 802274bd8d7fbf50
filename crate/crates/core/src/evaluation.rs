//! Statistical checks on path ensembles and Sharpe-ratio distributions.

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::backtest::SharpeSample;
use crate::error::{validation, Error, Result};
use crate::process::{gbm_log_moments, PathSet, ProcessSpec};
use crate::stats::{
    ecdf_sorted, freedman_diaconis_edges, histogram_mass, ks_one_sample, ks_two_sample, mean, r_squared,
    sample_variance, uniform_edges,
};

/// Minimum ensemble size for per-time-step moment statistics.
pub const MIN_PATHS: usize = 100;

/// Per-time-step log-moments of an ensemble compared with the GBM line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentFit {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub theory_means: Vec<f64>,
    pub theory_variances: Vec<f64>,
    /// `None` when the sample means do not vary over time.
    pub r2_mean: Option<f64>,
    /// `None` when the sample variances do not vary over time.
    pub r2_var: Option<f64>,
}

fn log_columns(paths: &PathSet) -> Result<Vec<Vec<f64>>> {
    if paths.len() < MIN_PATHS {
        return Err(validation(format!(
            "need at least {MIN_PATHS} paths, got {}",
            paths.len()
        )));
    }
    (0..paths.path_len())
        .map(|t| {
            paths
                .paths()
                .iter()
                .map(|p| {
                    let v = p.values()[t];
                    if v > 0.0 {
                        Ok(v.ln())
                    } else {
                        Err(Error::Domain(format!("non-positive value {v} at t = {t}")))
                    }
                })
                .collect()
        })
        .collect()
}

/// R² of the per-`t` sample mean and variance of `ln y(t)` against the
/// theoretical GBM lines. The theoretical line is the predictor; nothing is refit.
pub fn moment_r2(paths: &PathSet, spec: &ProcessSpec) -> Result<MomentFit> {
    gbm_log_moments(spec, 0.0)?;
    let cols = log_columns(paths)?;
    let means: Vec<f64> = cols.iter().map(|c| mean(c)).collect();
    let variances: Vec<f64> = cols.iter().map(|c| sample_variance(c)).collect();
    let (theory_means, theory_variances): (Vec<f64>, Vec<f64>) = (0..cols.len())
        .map(|t| gbm_log_moments(spec, t as f64).expect("validated above"))
        .unzip();
    Ok(MomentFit {
        r2_mean: r_squared(&means, &theory_means),
        r2_var: r_squared(&variances, &theory_variances),
        means,
        variances,
        theory_means,
        theory_variances,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityStep {
    pub t: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub alpha: f64,
    /// Per-test level after Bonferroni correction, `alpha / T`.
    pub corrected_alpha: f64,
    pub steps: Vec<NormalityStep>,
    pub pass_fraction: f64,
    /// True when at least 95% of time steps pass.
    pub passed: bool,
}

pub const NORMALITY_PASS_FRACTION: f64 = 0.95;

/// One-sample KS test of `ln y(t)` against `N((μ − σ²/2)t + ln y0, σ²t)` for
/// every `t ≥ 1` (t = 0 has zero variance and is skipped).
pub fn normality_test(paths: &PathSet, spec: &ProcessSpec, alpha: f64) -> Result<NormalityReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(validation(format!("alpha must be in (0, 1), got {alpha}")));
    }
    gbm_log_moments(spec, 0.0)?;
    let cols = log_columns(paths)?;
    let n_tests = cols.len() - 1;
    let corrected = alpha / n_tests as f64;
    let mut steps = Vec::with_capacity(n_tests);
    for (t, col) in cols.iter().enumerate().skip(1) {
        let (m, v) = gbm_log_moments(spec, t as f64)?;
        if v <= 0.0 {
            return Err(Error::Domain(format!("zero theoretical variance at t = {t}")));
        }
        let dist = Normal::new(m, v.sqrt()).map_err(|e| Error::Domain(e.to_string()))?;
        let ks = ks_one_sample(col, |x| dist.cdf(x));
        steps.push(NormalityStep {
            t,
            statistic: ks.statistic,
            p_value: ks.p_value,
            pass: ks.p_value > corrected,
        });
    }
    let pass_fraction = steps.iter().filter(|s| s.pass).count() as f64 / n_tests as f64;
    Ok(NormalityReport {
        alpha,
        corrected_alpha: corrected,
        steps,
        pass_fraction,
        passed: pass_fraction >= NORMALITY_PASS_FRACTION,
    })
}

/// Target (true process) versus experimental (generated) Sharpe distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistComparison {
    pub target: Vec<f64>,
    pub experimental: Vec<f64>,
    pub bin_edges: Vec<f64>,
    pub pdf_target: Vec<f64>,
    pub pdf_experimental: Vec<f64>,
    /// Pooled sorted sample points at which both CDFs are evaluated.
    pub cdf_grid: Vec<f64>,
    pub cdf_target: Vec<f64>,
    pub cdf_experimental: Vec<f64>,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
}

impl DistComparison {
    /// Writes `x,cdf_target,cdf_experimental` rows.
    pub fn write_cdf_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,cdf_target,cdf_experimental")?;
        for ((x, a), b) in self.cdf_grid.iter().zip(&self.cdf_target).zip(&self.cdf_experimental) {
            writeln!(w, "{x:?},{a:?},{b:?}")?;
        }
        Ok(())
    }

    /// Writes `bin_lo,bin_hi,pdf_target,pdf_experimental` rows.
    pub fn write_pdf_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "bin_lo,bin_hi,pdf_target,pdf_experimental")?;
        for (k, e) in self.bin_edges.windows(2).enumerate() {
            writeln!(
                w,
                "{:?},{:?},{:?},{:?}",
                e[0], e[1], self.pdf_target[k], self.pdf_experimental[k]
            )?;
        }
        Ok(())
    }
}

/// Histogram PDFs over shared bins (Freedman–Diaconis on the pooled sample
/// unless `bins` is given), empirical CDFs and the two-sample KS statistic.
pub fn compare_sharpe_dists(target: &[f64], experimental: &[f64], bins: Option<usize>) -> Result<DistComparison> {
    if target.is_empty() || experimental.is_empty() {
        return Err(validation("both Sharpe samples must be non-empty"));
    }
    let mut pooled: Vec<f64> = target.iter().chain(experimental).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let bin_edges = match bins {
        Some(0) => return Err(validation("bins must be positive")),
        Some(b) => {
            let (lo, hi) = (pooled[0], pooled[pooled.len() - 1]);
            if hi > lo {
                uniform_edges(lo, hi, b)
            } else {
                vec![lo - 0.5, lo + 0.5]
            }
        }
        None => freedman_diaconis_edges(&pooled),
    };
    let mut st = target.to_vec();
    st.sort_by(f64::total_cmp);
    let mut se = experimental.to_vec();
    se.sort_by(f64::total_cmp);
    pooled.dedup();
    let ks = ks_two_sample(target, experimental);
    Ok(DistComparison {
        pdf_target: histogram_mass(target, &bin_edges),
        pdf_experimental: histogram_mass(experimental, &bin_edges),
        cdf_target: pooled.iter().map(|x| ecdf_sorted(&st, *x)).collect(),
        cdf_experimental: pooled.iter().map(|x| ecdf_sorted(&se, *x)).collect(),
        cdf_grid: pooled,
        bin_edges,
        target: target.to_vec(),
        experimental: experimental.to_vec(),
        ks_statistic: ks.statistic,
        ks_p_value: ks.p_value,
    })
}

pub const DEFAULT_EFFECTIVENESS_THRESHOLD: f64 = 0.75;

/// Whether a strategy "works" on an ensemble: the fraction of paths with a
/// positive Sharpe ratio strictly exceeds the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectivenessVerdict {
    pub n_paths: usize,
    pub n_positive: usize,
    pub n_undefined: usize,
    pub fraction_positive: f64,
    pub threshold: f64,
    pub effective: bool,
}

/// Undefined Sharpe ratios stay in the denominator and count as not positive.
pub fn effectiveness(sample: &SharpeSample, threshold: f64) -> Result<EffectivenessVerdict> {
    if sample.is_empty() {
        return Err(validation("effectiveness needs a non-empty sample"));
    }
    let n_positive = sample
        .per_path
        .iter()
        .filter(|s| matches!(s, Some(v) if *v > 0.0))
        .count();
    let fraction = n_positive as f64 / sample.len() as f64;
    Ok(EffectivenessVerdict {
        n_paths: sample.len(),
        n_positive,
        n_undefined: sample.n_undefined(),
        fraction_positive: fraction,
        threshold,
        effective: fraction > threshold,
    })
}

/// Generator-based verdicts against Monte Carlo verdicts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub rgan_pos_mc_pos: usize,
    pub rgan_pos_mc_neg: usize,
    pub rgan_neg_mc_pos: usize,
    pub rgan_neg_mc_neg: usize,
}

impl ConfusionMatrix {
    /// Tabulates `(generator verdict, Monte Carlo verdict)` pairs.
    pub fn from_pairs<I: IntoIterator<Item = (bool, bool)>>(pairs: I) -> Self {
        let mut m = ConfusionMatrix::default();
        for (rgan, mc) in pairs {
            match (rgan, mc) {
                (true, true) => m.rgan_pos_mc_pos += 1,
                (true, false) => m.rgan_pos_mc_neg += 1,
                (false, true) => m.rgan_neg_mc_pos += 1,
                (false, false) => m.rgan_neg_mc_neg += 1,
            }
        }
        m
    }

    pub fn total(&self) -> usize {
        self.rgan_pos_mc_pos + self.rgan_pos_mc_neg + self.rgan_neg_mc_pos + self.rgan_neg_mc_neg
    }

    pub fn agreements(&self) -> usize {
        self.rgan_pos_mc_pos + self.rgan_neg_mc_neg
    }

    pub fn rgan_negative(&self) -> usize {
        self.rgan_neg_mc_pos + self.rgan_neg_mc_neg
    }

    /// Writes `rgan,mc,count` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "rgan,mc,count")?;
        writeln!(w, "positive,positive,{}", self.rgan_pos_mc_pos)?;
        writeln!(w, "positive,negative,{}", self.rgan_pos_mc_neg)?;
        writeln!(w, "negative,positive,{}", self.rgan_neg_mc_pos)?;
        writeln!(w, "negative,negative,{}", self.rgan_neg_mc_neg)?;
        Ok(())
    }
}
