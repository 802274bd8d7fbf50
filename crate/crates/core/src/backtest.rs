//! P&L accounting, Sharpe ratios and grid searches over strategy configurations.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::process::{PathSet, PricePath};
use crate::strategy::{
    bh_into, positions, MovingAverages, ParamGrid, Position, PositionSeries, StrategyConfig, MAC_MAX_WINDOW,
};

/// Per-period profit and loss: `pnl[t] = position[t] · (p[t+1] − p[t])`.
pub fn pnl(path: &PricePath, positions: &PositionSeries) -> Result<Vec<f64>> {
    if positions.len() != path.steps() {
        return Err(validation(format!(
            "{} positions for a path with {} transitions",
            positions.len(),
            path.steps()
        )));
    }
    Ok(pnl_of(path.values(), positions.as_slice()))
}

fn pnl_of(prices: &[f64], positions: &[Position]) -> Vec<f64> {
    prices
        .windows(2)
        .zip(positions)
        .map(|(w, p)| p.as_f64() * (w[1] - w[0]))
        .collect()
}

/// Cumulative P&L starting from 0; one element longer than `pnl`.
pub fn equity_curve(pnl: &[f64]) -> Vec<f64> {
    let mut eq = Vec::with_capacity(pnl.len() + 1);
    let mut acc = 0.0;
    eq.push(acc);
    for x in pnl {
        acc += x;
        eq.push(acc);
    }
    eq
}

/// Per-period Sharpe ratio `(mean(pnl) − r_f) / stdev(pnl)` with the `n − 1`
/// standard deviation. `None` when the series has no variation (including
/// single-element series), which callers rank below every defined value.
pub fn sharpe(pnl: &[f64], risk_free: f64) -> Option<f64> {
    if pnl.len() < 2 {
        return None;
    }
    let first = pnl[0];
    if pnl.iter().all(|x| *x == first) {
        return None;
    }
    let n = pnl.len() as f64;
    let mean = pnl.iter().sum::<f64>() / n;
    let var = pnl.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if sd > 0.0 {
        Some((mean - risk_free) / sd)
    } else {
        None
    }
}

/// Scales a per-period Sharpe ratio by `sqrt(periods_per_year)`.
pub fn annualize(sharpe: f64, periods_per_year: f64) -> f64 {
    sharpe * periods_per_year.sqrt()
}

/// Number of entries: positions that become non-zero from flat (the period
/// before the first transition counts as flat).
pub fn count_trades(positions: &PositionSeries) -> usize {
    let mut prev = Position::Flat;
    let mut n = 0;
    for &p in positions.as_slice() {
        if prev == Position::Flat && p != Position::Flat {
            n += 1;
        }
        prev = p;
    }
    n
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub config: StrategyConfig,
    pub pnl: Vec<f64>,
    pub equity: Vec<f64>,
    pub sharpe: Option<f64>,
    pub n_trades: usize,
}

impl BacktestReport {
    pub fn total_pnl(&self) -> f64 {
        *self.equity.last().expect("equity is never empty")
    }
}

pub fn backtest(path: &PricePath, config: &StrategyConfig) -> Result<BacktestReport> {
    let pos = positions(path, config)?;
    let pnl = pnl(path, &pos)?;
    Ok(BacktestReport {
        config: *config,
        equity: equity_curve(&pnl),
        sharpe: sharpe(&pnl, 0.0),
        n_trades: count_trades(&pos),
        pnl,
    })
}

/// Reusable per-path state for scoring many configurations on one path.
struct PathScorer<'a> {
    prices: &'a [f64],
    ma: Option<MovingAverages>,
    pos: Vec<Position>,
    pnl: Vec<f64>,
}

impl<'a> PathScorer<'a> {
    fn new(prices: &'a [f64], max_window: usize) -> Self {
        PathScorer {
            prices,
            ma: (max_window > 0).then(|| MovingAverages::new(prices, max_window)),
            pos: Vec::with_capacity(prices.len()),
            pnl: Vec::with_capacity(prices.len()),
        }
    }

    fn sharpe(&mut self, config: &StrategyConfig) -> Option<f64> {
        match *config {
            StrategyConfig::Mac { p1, p2 } => self.ma.as_ref().expect("MAC scoring needs moving averages").mac_into(
                p1 as usize,
                p2 as usize,
                &mut self.pos,
            ),
            StrategyConfig::Bh {
                entry,
                hold,
                stop_loss,
                side,
            } => bh_into(self.prices, entry, hold, stop_loss, side, &mut self.pos),
        }
        self.pnl.clear();
        self.pnl.extend(
            self.prices
                .windows(2)
                .zip(&self.pos)
                .map(|(w, p)| p.as_f64() * (w[1] - w[0])),
        );
        sharpe(&self.pnl, 0.0)
    }
}

/// Scores of every configuration in a grid, averaged over a path set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    /// `(config, score)` in grid order; `None` marks a configuration whose
    /// Sharpe ratio was undefined on every path.
    pub scores: Vec<(StrategyConfig, Option<f64>)>,
    pub best_config: StrategyConfig,
    pub best_score: f64,
}

impl GridResult {
    /// Writes `config_json,score` rows; excluded configs get `NaN`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "config_json,score")?;
        for (c, s) in &self.scores {
            let json = c.to_json().replace('"', "\"\"");
            match s {
                Some(v) => writeln!(w, "\"{json}\",{v:?}")?,
                None => writeln!(w, "\"{json}\",NaN")?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct ScoreAcc {
    sum: f64,
    undefined: u32,
    min: f64,
}

impl ScoreAcc {
    const EMPTY: ScoreAcc = ScoreAcc {
        sum: 0.0,
        undefined: 0,
        min: f64::INFINITY,
    };
}

/// Upper bound on the number of path chunks scored independently. Chunk
/// boundaries depend only on the number of paths, so floating-point sums are
/// identical for any worker count.
const MAX_CHUNKS: usize = 32;

/// Picks the configuration with the highest mean Sharpe ratio over `paths`.
///
/// A path on which a configuration's Sharpe ratio is undefined contributes
/// the lowest defined per-path Sharpe ratio seen anywhere in the search, so
/// it ranks at the bottom without being silently dropped. Configurations
/// undefined on every path are excluded. Ties go to the earliest
/// configuration in grid order.
pub fn select_best(paths: &PathSet, grid: &ParamGrid) -> Result<GridResult> {
    let configs = grid.configs();
    let max_window = grid.max_window();
    let chunk = paths.len().div_ceil(MAX_CHUNKS).max(1);
    let partials: Vec<Vec<ScoreAcc>> = paths
        .paths()
        .par_chunks(chunk)
        .map(|chunk| {
            let mut acc = vec![ScoreAcc::EMPTY; configs.len()];
            for path in chunk {
                let mut scorer = PathScorer::new(path.values(), max_window);
                for (a, c) in acc.iter_mut().zip(configs) {
                    match scorer.sharpe(c) {
                        Some(s) => {
                            a.sum += s;
                            a.min = a.min.min(s);
                        }
                        None => a.undefined += 1,
                    }
                }
            }
            acc
        })
        .collect();

    let mut total = vec![ScoreAcc::EMPTY; configs.len()];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.sum += p.sum;
            t.undefined += p.undefined;
            t.min = t.min.min(p.min);
        }
    }
    let floor = total.iter().map(|a| a.min).fold(f64::INFINITY, f64::min);
    let n = paths.len() as f64;
    let n_paths = paths.len() as u32;
    let scores: Vec<(StrategyConfig, Option<f64>)> = configs
        .iter()
        .zip(&total)
        .map(|(c, a)| {
            let score = (a.undefined < n_paths).then(|| {
                let penalty = if a.undefined > 0 {
                    a.undefined as f64 * floor
                } else {
                    0.0
                };
                (a.sum + penalty) / n
            });
            (*c, score)
        })
        .collect();

    let mut best: Option<(StrategyConfig, f64)> = None;
    for (c, s) in &scores {
        if let Some(s) = *s {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((*c, s));
            }
        }
    }
    let (best_config, best_score) = best.ok_or(Error::NoViableStrategy)?;
    Ok(GridResult {
        scores,
        best_config,
        best_score,
    })
}

/// Splits a path at transition `split`: the in-sample part holds values
/// `0..=split` and the out-of-sample part holds `split..`, sharing the
/// boundary price. Requires `1 < split < steps`.
pub fn split_is_oos(path: &PricePath, split: usize) -> Result<(PricePath, PricePath)> {
    let steps = path.steps();
    if split <= 1 || split >= steps {
        return Err(validation(format!(
            "split index must satisfy 1 < split < {steps}, got {split}"
        )));
    }
    let mk = |values: &[f64]| PricePath {
        values: values.to_vec(),
        ..path.clone()
    };
    Ok((mk(&path.values()[..=split]), mk(&path.values()[split..])))
}

/// Per-path Sharpe ratios of one configuration over a path set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpeSample {
    pub per_path: Vec<Option<f64>>,
}

impl SharpeSample {
    pub fn defined(&self) -> Vec<f64> {
        self.per_path.iter().flatten().copied().collect()
    }

    pub fn n_undefined(&self) -> usize {
        self.per_path.iter().filter(|s| s.is_none()).count()
    }

    pub fn len(&self) -> usize {
        self.per_path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_path.is_empty()
    }

    /// Mean of the defined values.
    pub fn mean(&self) -> Option<f64> {
        let d = self.defined();
        (!d.is_empty()).then(|| d.iter().sum::<f64>() / d.len() as f64)
    }

    /// Standard error of the mean of the defined values.
    pub fn std_error(&self) -> Option<f64> {
        let d = self.defined();
        if d.len() < 2 {
            return None;
        }
        let n = d.len() as f64;
        let m = d.iter().sum::<f64>() / n;
        let var = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        Some((var / n).sqrt())
    }
}

pub fn sharpe_distribution(config: &StrategyConfig, paths: &PathSet) -> Result<SharpeSample> {
    config.validate()?;
    let max_window = match *config {
        StrategyConfig::Mac { p1, p2 } => p1.max(p2) as usize,
        StrategyConfig::Bh { .. } => 0,
    };
    let per_path = paths
        .paths()
        .par_iter()
        .map(|p| PathScorer::new(p.values(), max_window).sharpe(config))
        .collect();
    Ok(SharpeSample { per_path })
}

pub const HEATMAP_SIDE: usize = MAC_MAX_WINDOW as usize;

/// Sharpe ratio of every MAC `(p1, p2)` pair on one path; `NaN` where undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapMatrix {
    values: Vec<f64>,
}

impl HeatmapMatrix {
    pub fn get(&self, p1: usize, p2: usize) -> f64 {
        self.values[(p1 - 1) * HEATMAP_SIDE + (p2 - 1)]
    }

    pub fn is_undefined(&self, p1: usize, p2: usize) -> bool {
        self.get(p1, p2).is_nan()
    }

    /// Mean absolute difference between horizontally and vertically adjacent
    /// cells, over pairs where both cells are defined.
    pub fn smoothness(&self) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for p1 in 1..=HEATMAP_SIDE {
            for p2 in 1..=HEATMAP_SIDE {
                let v = self.get(p1, p2);
                let mut pair = |u: f64| {
                    if !v.is_nan() && !u.is_nan() {
                        sum += (v - u).abs();
                        n += 1;
                    }
                };
                if p2 < HEATMAP_SIDE {
                    pair(self.get(p1, p2 + 1));
                }
                if p1 < HEATMAP_SIDE {
                    pair(self.get(p1 + 1, p2));
                }
            }
        }
        (n > 0).then(|| sum / n as f64)
    }

    /// Writes `p1,p2,sharpe` rows with `NaN` for undefined cells.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "p1,p2,sharpe")?;
        for p1 in 1..=HEATMAP_SIDE {
            for p2 in 1..=HEATMAP_SIDE {
                let v = self.get(p1, p2);
                if v.is_nan() {
                    writeln!(w, "{p1},{p2},NaN")?;
                } else {
                    writeln!(w, "{p1},{p2},{v:?}")?;
                }
            }
        }
        Ok(())
    }
}

pub fn mac_heatmap(path: &PricePath) -> Result<HeatmapMatrix> {
    if path.len() <= HEATMAP_SIDE {
        return Err(validation(format!(
            "heatmap needs more than {HEATMAP_SIDE} prices, got {}",
            path.len()
        )));
    }
    let mut scorer = PathScorer::new(path.values(), HEATMAP_SIDE);
    let mut values = Vec::with_capacity(HEATMAP_SIDE * HEATMAP_SIDE);
    for p1 in 1..=MAC_MAX_WINDOW {
        for p2 in 1..=MAC_MAX_WINDOW {
            values.push(scorer.sharpe(&StrategyConfig::Mac { p1, p2 }).unwrap_or(f64::NAN));
        }
    }
    Ok(HeatmapMatrix { values })
}
