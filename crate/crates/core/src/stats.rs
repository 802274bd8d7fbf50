//! Small statistics toolkit: moments, empirical CDFs, Kolmogorov–Smirnov
//! tests, coefficient of determination and histogram binning.

use std::cmp::Ordering;
use std::f64::consts::PI;

/// Arithmetic mean, accumulated relative to the first element so that
/// constant data has exactly zero deviation from its mean.
pub fn mean(xs: &[f64]) -> f64 {
    let x0 = xs[0];
    x0 + xs.iter().map(|x| x - x0).sum::<f64>() / xs.len() as f64
}

/// Sample variance with the `n − 1` divisor.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    v
}

/// Linear-interpolation quantile of sorted data (`q` in [0, 1]).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Fraction of `sorted` that is `<= x`.
pub fn ecdf_sorted(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|v| *v <= x) as f64 / sorted.len() as f64
}

/// Kolmogorov distribution survival function `Q(λ) = P(K > λ)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // theta-function form converges quickly for small λ
        let a = -PI * PI / (8.0 * lambda * lambda);
        let mut p = 0.0;
        for k in 1..=20 {
            let j = (2 * k - 1) as f64;
            p += (a * j * j).exp();
        }
        (1.0 - (2.0 * PI).sqrt() / lambda * p).clamp(0.0, 1.0)
    } else {
        let mut q = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            q += if k % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        (2.0 * q).clamp(0.0, 1.0)
    }
}

/// Asymptotic KS p-value with Stephens' small-sample correction, for an
/// effective sample size `n_eff`.
pub fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_survival((s + 0.12 + 0.11 / s) * d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample KS test of `xs` against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> KsResult {
    let s = sorted(xs);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        let upper = (i + 1) as f64 / n - f;
        let lower = f - i as f64 / n;
        d = d.max(upper).max(lower);
    }
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, n),
    }
}

/// Two-sample KS statistic `sup |F_x − F_y|`.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> KsResult {
    let a = sorted(xs);
    let b = sorted(ys);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, n * m / (n + m)),
    }
}

/// Asymptotic two-sample KS critical value at level `alpha`.
pub fn ks_two_sample_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// `1 − SS_res / SS_tot` of `observed` against a fixed predictor. `None` when
/// the observations have no spread.
pub fn r_squared(observed: &[f64], predicted: &[f64]) -> Option<f64> {
    assert_eq!(observed.len(), predicted.len());
    let m = mean(observed);
    let ss_tot: f64 = observed.iter().map(|y| (y - m) * (y - m)).sum();
    if ss_tot == 0.0 {
        return None;
    }
    let ss_res: f64 = observed.iter().zip(predicted).map(|(y, f)| (y - f) * (y - f)).sum();
    Some(1.0 - ss_res / ss_tot)
}

/// Freedman–Diaconis bin edges over `xs`: width `2·IQR·n^(−1/3)`, capped at
/// 1,000 bins. Falls back to a single bin when the data has no spread.
pub fn freedman_diaconis_edges(xs: &[f64]) -> Vec<f64> {
    let s = sorted(xs);
    let (lo, hi) = (s[0], s[s.len() - 1]);
    if hi <= lo {
        return vec![lo - 0.5, lo + 0.5];
    }
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    let width = 2.0 * iqr * (s.len() as f64).powf(-1.0 / 3.0);
    let bins = if width > 0.0 {
        ((hi - lo) / width).ceil().clamp(1.0, 1000.0) as usize
    } else {
        1
    };
    uniform_edges(lo, hi, bins)
}

pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let w = (hi - lo) / bins as f64;
    (0..=bins)
        .map(|i| if i == bins { hi } else { lo + w * i as f64 })
        .collect()
}

/// Probability mass per bin; the last bin is closed on the right. Values
/// outside the edges are ignored.
pub fn histogram_mass(xs: &[f64], edges: &[f64]) -> Vec<f64> {
    let bins = edges.len() - 1;
    let mut counts = vec![0usize; bins];
    for &x in xs {
        if x < edges[0] || x > edges[bins] {
            continue;
        }
        let k = edges.partition_point(|e| *e <= x).saturating_sub(1).min(bins - 1);
        counts[k] += 1;
    }
    let n = xs.len() as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{standard_normal, substream};
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn moments() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(sample_variance(&[1.0, 2.0, 3.0]), 1.0);
    }

    #[test]
    fn kolmogorov_reference_points() {
        // P(K > 1.3581) ≈ 0.05 and P(K > 1.6276) ≈ 0.01
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-3);
        // the two series agree where they meet
        let a = kolmogorov_survival(1.1799999);
        let b = kolmogorov_survival(1.18);
        assert!((a - b).abs() < 1e-6);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
        assert!(kolmogorov_survival(0.1) > 0.999_999);
        assert!(kolmogorov_survival(5.0) < 1e-20);
    }

    #[test]
    fn ks_one_sample_hand_case() {
        // uniform CDF, points 0.1, 0.5, 0.9: the largest gap is 1/3 − 0.1 at x = 0.1
        let r = ks_one_sample(&[0.9, 0.1, 0.5], |x| x.clamp(0.0, 1.0));
        assert!((r.statistic - (1.0 / 3.0 - 0.1)).abs() < 1e-12);
    }

    #[test]
    fn ks_one_sample_normal_draws_pass() {
        let mut rng = substream(5, 0);
        let xs: Vec<f64> = (0..5000).map(|_| standard_normal(&mut rng)).collect();
        let n = Normal::new(0.0, 1.0).unwrap();
        let r = ks_one_sample(&xs, |x| n.cdf(x));
        assert!(r.p_value > 0.01, "{r:?}");
        let shifted = ks_one_sample(&xs, |x| n.cdf(x - 0.2));
        assert!(shifted.p_value < 1e-6);
    }

    #[test]
    fn ks_two_sample_extremes() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(ks_two_sample(&x, &x).statistic, 0.0);
        assert_eq!(ks_two_sample(&x, &[10.0, 11.0]).statistic, 1.0);
        // brute force over pooled points
        let y = [2.5, 0.5, 3.5];
        let (sx, sy) = (sorted(&x), sorted(&y));
        let brute = x
            .iter()
            .chain(&y)
            .map(|&t| (ecdf_sorted(&sx, t) - ecdf_sorted(&sy, t)).abs())
            .fold(0.0, f64::max);
        assert!((ks_two_sample(&x, &y).statistic - brute).abs() < 1e-15);
        assert!((ks_two_sample_critical(0.01, 2000, 2000) - 1.6276 * (2.0f64 / 2000.0).sqrt()).abs() < 1e-4);
    }

    #[test]
    fn r_squared_cases() {
        assert_eq!(r_squared(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), Some(1.0));
        assert_eq!(r_squared(&[2.0, 2.0], &[1.0, 3.0]), None);
        // predicting the mean gives 0
        assert_eq!(r_squared(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]), Some(0.0));
        assert!(r_squared(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() < 0.0);
    }

    #[test]
    fn histogram_masses_sum_to_one() {
        let mut rng = substream(1, 1);
        let xs: Vec<f64> = (0..1000).map(|_| standard_normal(&mut rng)).collect();
        let edges = freedman_diaconis_edges(&xs);
        assert!(edges.len() > 5);
        let m = histogram_mass(&xs, &edges);
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let one = freedman_diaconis_edges(&[2.0, 2.0]);
        assert_eq!(histogram_mass(&[2.0, 2.0], &one), vec![1.0]);
    }
}
