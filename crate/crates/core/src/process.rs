//! Price-generating stochastic processes and simulated path sets.
//!
//! Four processes are supported:
//!
//! ```text
//! random walk   p(t+1) = p(t) + σ·ε(t)
//! white noise   p(t)   = σ·ε(t)
//! GBM           y(t)   = y0·exp((μ − σ²/2)·t + σ·W(t))
//! AR(2)         y(t)   = a + b·y(t−1) + c·y(t−2) + σ·ε(t)
//! ```
//!
//! with ε iid standard normal and unit time steps. GBM is sampled exactly
//! from its closed-form solution, so there is no discretisation error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::rng::{standard_normal, substream};

/// Number of AR(2) steps simulated and discarded before the first emitted value.
pub const AR2_DEFAULT_BURN_IN: usize = 100;

fn default_burn_in() -> usize {
    AR2_DEFAULT_BURN_IN
}

/// Parametric description of a price process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProcessSpec {
    RandomWalk {
        sigma: f64,
        #[serde(default)]
        p0: f64,
    },
    WhiteNoise {
        sigma: f64,
    },
    Gbm {
        mu: f64,
        sigma: f64,
        y0: f64,
    },
    Ar2 {
        #[serde(default)]
        a: f64,
        b: f64,
        c: f64,
        sigma: f64,
        #[serde(default)]
        p0: f64,
        #[serde(default)]
        p1_init: f64,
        #[serde(default = "default_burn_in")]
        burn_in: usize,
    },
}

impl ProcessSpec {
    pub fn random_walk(sigma: f64) -> Self {
        ProcessSpec::RandomWalk { sigma, p0: 0.0 }
    }

    pub fn white_noise(sigma: f64) -> Self {
        ProcessSpec::WhiteNoise { sigma }
    }

    pub fn gbm(mu: f64, sigma: f64, y0: f64) -> Self {
        ProcessSpec::Gbm { mu, sigma, y0 }
    }

    /// GBM with the workspace defaults μ = 0.02, σ = 0.1, y0 = 1 per step.
    pub fn default_gbm() -> Self {
        Self::gbm(0.02, 0.1, 1.0)
    }

    pub fn ar2(a: f64, b: f64, c: f64, sigma: f64) -> Self {
        ProcessSpec::Ar2 {
            a,
            b,
            c,
            sigma,
            p0: 0.0,
            p1_init: 0.0,
            burn_in: AR2_DEFAULT_BURN_IN,
        }
    }

    /// The AR(2) process with a = 0, b = 1.1, c = −0.5, σ = 1.
    pub fn default_ar2() -> Self {
        Self::ar2(0.0, 1.1, -0.5, 1.0)
    }

    pub fn label(&self) -> &'static str {
        match self {
            ProcessSpec::RandomWalk { .. } => "random-walk",
            ProcessSpec::WhiteNoise { .. } => "white-noise",
            ProcessSpec::Gbm { .. } => "gbm",
            ProcessSpec::Ar2 { .. } => "ar2",
        }
    }

    pub fn sigma(&self) -> f64 {
        match *self {
            ProcessSpec::RandomWalk { sigma, .. }
            | ProcessSpec::WhiteNoise { sigma }
            | ProcessSpec::Gbm { sigma, .. }
            | ProcessSpec::Ar2 { sigma, .. } => sigma,
        }
    }

    /// Checks parameter invariants. GBM alone accepts σ = 0 (the deterministic limit).
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(validation(format!("{name} must be finite, got {v}")))
            }
        };
        let sigma = self.sigma();
        finite("sigma", sigma)?;
        match *self {
            ProcessSpec::Gbm { mu, y0, .. } => {
                finite("mu", mu)?;
                finite("y0", y0)?;
                if sigma < 0.0 {
                    return Err(validation(format!("sigma must be >= 0 for GBM, got {sigma}")));
                }
                if y0 <= 0.0 {
                    return Err(validation(format!("y0 must be > 0, got {y0}")));
                }
            }
            _ if sigma <= 0.0 => {
                return Err(validation(format!("sigma must be > 0, got {sigma}")));
            }
            ProcessSpec::RandomWalk { p0, .. } => finite("p0", p0)?,
            ProcessSpec::Ar2 {
                a, b, c, p0, p1_init, ..
            } => {
                for (n, v) in [("a", a), ("b", b), ("c", c), ("p0", p0), ("p1_init", p1_init)] {
                    finite(n, v)?;
                }
            }
            ProcessSpec::WhiteNoise { .. } => {}
        }
        Ok(())
    }
}

/// One simulated or generated price series of `steps + 1` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePath {
    pub values: Vec<f64>,
    /// Master seed of the set this path was drawn from.
    pub seed: u64,
    /// Substream index within that seed.
    pub stream: u64,
    /// Provenance label: a process label or `"gan"`.
    pub source: String,
}

impl PricePath {
    pub fn new(values: Vec<f64>, seed: u64, stream: u64, source: impl Into<String>) -> Result<Self> {
        if values.len() < 2 {
            return Err(validation(format!(
                "a price path needs at least 2 values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(validation(format!("non-finite price at index {i}")));
        }
        Ok(PricePath {
            values,
            seed,
            stream,
            source: source.into(),
        })
    }

    /// Builds an unlabelled path, mostly for tests and examples.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(values, 0, 0, "external")
    }

    /// Number of price values (steps + 1).
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of price transitions.
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Multiplies every price by `k`, keeping provenance.
    pub fn scaled(&self, k: f64) -> PricePath {
        PricePath {
            values: self.values.iter().map(|v| v * k).collect(),
            ..self.clone()
        }
    }
}

/// Where a [`PathSet`] came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PathOrigin {
    Process {
        spec: ProcessSpec,
        steps: usize,
        seed: u64,
    },
    Generator {
        /// Checkpoint location, when the model was loaded from disk.
        checkpoint: Option<String>,
        seed: u64,
        /// Set when the requested length exceeds the length the model was trained on.
        extrapolated: bool,
    },
    External {
        label: String,
    },
}

/// A non-empty collection of equal-length price paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    paths: Vec<PricePath>,
    origin: PathOrigin,
}

impl PathSet {
    pub fn new(paths: Vec<PricePath>, origin: PathOrigin) -> Result<Self> {
        let first = paths
            .first()
            .ok_or_else(|| validation("a path set must contain at least one path"))?;
        let len = first.len();
        if let Some(i) = paths.iter().position(|p| p.len() != len) {
            return Err(validation(format!(
                "path {i} has length {}, expected {len}",
                paths[i].len()
            )));
        }
        Ok(PathSet { paths, origin })
    }

    pub fn paths(&self) -> &[PricePath] {
        &self.paths
    }

    pub fn into_paths(self) -> Vec<PricePath> {
        self.paths
    }

    pub fn origin(&self) -> &PathOrigin {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Values per path (steps + 1).
    pub fn path_len(&self) -> usize {
        self.paths[0].len()
    }

    pub fn steps(&self) -> usize {
        self.path_len() - 1
    }

    /// Splits into the first `n_first` paths and the rest. Both halves keep the origin.
    pub fn split_at(self, n_first: usize) -> Result<(PathSet, PathSet)> {
        if n_first == 0 || n_first >= self.paths.len() {
            return Err(validation(format!(
                "cannot split {} paths at {n_first}",
                self.paths.len()
            )));
        }
        let mut first = self.paths;
        let second = first.split_off(n_first);
        Ok((
            PathSet {
                paths: first,
                origin: self.origin.clone(),
            },
            PathSet {
                paths: second,
                origin: self.origin,
            },
        ))
    }

    /// Values at time index `t` across all paths.
    pub fn column(&self, t: usize) -> Vec<f64> {
        self.paths.iter().map(|p| p.values[t]).collect()
    }

    /// Smallest and largest value over all paths.
    pub fn value_range(&self) -> (f64, f64) {
        self.paths
            .iter()
            .flat_map(|p| p.values.iter().copied())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimOptions {
    /// Reject AR(2) specifications whose characteristic roots are not inside the unit circle.
    pub require_stationary: bool,
}

/// Simulates `n_paths` independent paths of `steps` transitions.
///
/// Path `i` is drawn from substream `i` of `seed`, so the result does not
/// depend on the number of worker threads.
pub fn simulate(spec: &ProcessSpec, steps: usize, n_paths: usize, seed: u64) -> Result<PathSet> {
    simulate_with(spec, steps, n_paths, seed, SimOptions::default())
}

pub fn simulate_with(spec: &ProcessSpec, steps: usize, n_paths: usize, seed: u64, opts: SimOptions) -> Result<PathSet> {
    spec.validate()?;
    if steps == 0 {
        return Err(validation("steps must be positive"));
    }
    if n_paths == 0 {
        return Err(validation("n_paths must be positive"));
    }
    if opts.require_stationary {
        if let ProcessSpec::Ar2 { b, c, .. } = *spec {
            let (r1, r2) = char_roots(b, c);
            if r1 >= 1.0 {
                return Err(Error::NonStationary(r1, r2));
            }
        }
    }
    let label = spec.label();
    let paths = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| PricePath {
            values: simulate_one(spec, steps, seed, i),
            seed,
            stream: i,
            source: label.to_string(),
        })
        .collect();
    PathSet::new(
        paths,
        PathOrigin::Process {
            spec: *spec,
            steps,
            seed,
        },
    )
}

fn simulate_one(spec: &ProcessSpec, steps: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = substream(seed, stream);
    let mut out = Vec::with_capacity(steps + 1);
    match *spec {
        ProcessSpec::RandomWalk { sigma, p0 } => {
            let mut p = p0;
            out.push(p);
            for _ in 0..steps {
                p += sigma * standard_normal(&mut rng);
                out.push(p);
            }
        }
        ProcessSpec::WhiteNoise { sigma } => {
            out.extend((0..=steps).map(|_| sigma * standard_normal(&mut rng)));
        }
        ProcessSpec::Gbm { mu, sigma, y0 } => {
            let drift = mu - 0.5 * sigma * sigma;
            let mut w = 0.0;
            out.push(y0);
            for t in 1..=steps {
                w += standard_normal(&mut rng);
                out.push(y0 * (drift * t as f64 + sigma * w).exp());
            }
        }
        ProcessSpec::Ar2 {
            a,
            b,
            c,
            sigma,
            p0,
            p1_init,
            burn_in,
        } => {
            let (mut prev2, mut prev1) = (p0, p1_init);
            for i in 0..burn_in + steps + 1 {
                let y = a + b * prev1 + c * prev2 + sigma * standard_normal(&mut rng);
                prev2 = prev1;
                prev1 = y;
                if i >= burn_in {
                    out.push(y);
                }
            }
        }
    }
    out
}

/// Mean and variance of `ln y(t)` for a GBM: `((μ − σ²/2)·t + ln y0, σ²·t)`.
pub fn gbm_log_moments(spec: &ProcessSpec, t: f64) -> Result<(f64, f64)> {
    match *spec {
        ProcessSpec::Gbm { mu, sigma, y0 } => {
            if t.is_nan() || t < 0.0 {
                return Err(validation(format!("time must be >= 0, got {t}")));
            }
            Ok(((mu - 0.5 * sigma * sigma) * t + y0.ln(), sigma * sigma * t))
        }
        other => Err(Error::WrongProcess {
            expected: "gbm",
            actual: other.label(),
        }),
    }
}

/// Moduli of the roots of `z² − b·z − c = 0`, largest first.
fn char_roots(b: f64, c: f64) -> (f64, f64) {
    let disc = b * b + 4.0 * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let (r1, r2) = (((b + s) / 2.0).abs(), ((b - s) / 2.0).abs());
        (r1.max(r2), r1.min(r2))
    } else {
        // complex conjugate pair: |z|² equals the product of the roots, −c
        let m = (-c).sqrt();
        (m, m)
    }
}

/// Characteristic-root moduli of an AR(2) process, in descending order.
pub fn ar2_char_roots(spec: &ProcessSpec) -> Result<(f64, f64)> {
    match *spec {
        ProcessSpec::Ar2 { b, c, .. } => Ok(char_roots(b, c)),
        other => Err(Error::WrongProcess {
            expected: "ar2",
            actual: other.label(),
        }),
    }
}

pub fn ar2_is_stationary(spec: &ProcessSpec) -> Result<bool> {
    ar2_char_roots(spec).map(|(r1, _)| r1 < 1.0)
}

/// Stationary variance γ₀ from the Yule–Walker equations:
/// `σ²(1 − c) / ((1 + c)((1 − c)² − b²))`.
pub fn ar2_stationary_variance(spec: &ProcessSpec) -> Result<f64> {
    let (r1, r2) = ar2_char_roots(spec)?;
    if r1 >= 1.0 {
        return Err(Error::Domain(format!(
            "stationary variance undefined: root moduli {r1}, {r2}"
        )));
    }
    let ProcessSpec::Ar2 { b, c, sigma, .. } = *spec else {
        unreachable!("checked by ar2_char_roots");
    };
    Ok(sigma * sigma * (1.0 - c) / ((1.0 + c) * ((1.0 - c).powi(2) - b * b)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathSetMeta {
    pub origin: PathOrigin,
    pub n_paths: usize,
    pub steps: usize,
    pub source: String,
    pub seeds: Vec<(u64, u64)>,
}

/// Sidecar metadata location for a CSV file: `paths.csv` → `paths.meta.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// Writes `path_id,t,value` rows and a JSON metadata sidecar.
pub fn write_csv(set: &PathSet, csv_path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(csv_path)?);
    writeln!(w, "path_id,t,value")?;
    for (i, p) in set.paths.iter().enumerate() {
        for (t, v) in p.values.iter().enumerate() {
            writeln!(w, "{i},{t},{v:?}")?;
        }
    }
    w.flush()?;
    let meta = PathSetMeta {
        origin: set.origin.clone(),
        n_paths: set.len(),
        steps: set.steps(),
        source: set.paths[0].source.clone(),
        seeds: set.paths.iter().map(|p| (p.seed, p.stream)).collect(),
    };
    let f = BufWriter::new(File::create(sidecar_path(csv_path))?);
    serde_json::to_writer_pretty(f, &meta)?;
    Ok(())
}

/// Reads a path CSV. Rows must be grouped by `path_id` with consecutive `t`.
/// Provenance comes from the sidecar when one exists.
pub fn read_csv(csv_path: &Path) -> Result<PathSet> {
    let mut rdr = csv::Reader::from_path(csv_path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["path_id", "t", "value"] {
        return Err(validation(format!(
            "expected header path_id,t,value, got {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut series: Vec<Vec<f64>> = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse_err = |what: &str| validation(format!("row {}: bad {what}", row + 2));
        let id: usize = rec[0].parse().map_err(|_| parse_err("path_id"))?;
        let t: usize = rec[1].parse().map_err(|_| parse_err("t"))?;
        let v: f64 = rec[2].trim().parse().map_err(|_| parse_err("value"))?;
        if id == series.len() {
            series.push(Vec::new());
        }
        if id + 1 != series.len() {
            return Err(parse_err("path ordering"));
        }
        let s = &mut series[id];
        if t != s.len() {
            return Err(parse_err("time ordering"));
        }
        s.push(v);
    }
    let meta_path = sidecar_path(csv_path);
    let meta: Option<PathSetMeta> = if meta_path.exists() {
        Some(serde_json::from_reader(File::open(&meta_path)?)?)
    } else {
        None
    };
    let (origin, source) = match &meta {
        Some(m) => (m.origin.clone(), m.source.clone()),
        None => (
            PathOrigin::External {
                label: csv_path.display().to_string(),
            },
            "external".to_string(),
        ),
    };
    let paths = series
        .into_iter()
        .enumerate()
        .map(|(i, values)| {
            let (seed, stream) = meta
                .as_ref()
                .and_then(|m| m.seeds.get(i).copied())
                .unwrap_or((0, i as u64));
            PricePath::new(values, seed, stream, source.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    PathSet::new(paths, origin)
}
