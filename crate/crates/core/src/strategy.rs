//! Moving-average-cross (MAC) and buy-and-hold (BH) strategies.
//!
//! A strategy maps a price path of `T + 1` values to `T` positions in
//! {−1, 0, +1}; position `t` is held over the transition `p(t) → p(t+1)` and
//! depends only on prices up to and including `p(t)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::process::PricePath;

pub const MAC_MAX_WINDOW: u32 = 50;
pub const BH_MAX_ENTRY: u32 = 30;
pub const BH_MAX_HOLD: u32 = 30;
pub const BH_MAX_STOP_LOSS: u32 = 20;
/// BH divides the path into fixed blocks of this many trading days.
pub const MONTH_LEN: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(i8)]
pub enum Position {
    Short = -1,
    Flat = 0,
    Long = 1,
}

impl Position {
    #[inline]
    pub fn as_f64(self) -> f64 {
        self as i8 as f64
    }

    #[inline]
    pub fn negate(self) -> Position {
        match self {
            Position::Short => Position::Long,
            Position::Flat => Position::Flat,
            Position::Long => Position::Short,
        }
    }
}

/// Long (+1) or short (−1) side of a BH trade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Side {
    Short,
    Long,
}

impl Side {
    fn position(self) -> Position {
        match self {
            Side::Short => Position::Short,
            Side::Long => Position::Long,
        }
    }

    fn sign(self) -> f64 {
        self.position().as_f64()
    }

    pub fn flip(self) -> Side {
        match self {
            Side::Short => Side::Long,
            Side::Long => Side::Short,
        }
    }
}

impl TryFrom<i8> for Side {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, Self::Error> {
        match v {
            -1 => Ok(Side::Short),
            1 => Ok(Side::Long),
            other => Err(format!("side must be -1 or 1, got {other}")),
        }
    }
}

impl From<Side> for i8 {
    fn from(s: Side) -> i8 {
        s.position() as i8
    }
}

/// One point of a strategy family's parameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StrategyConfig {
    Mac {
        p1: u32,
        p2: u32,
    },
    Bh {
        entry: u32,
        hold: u32,
        stop_loss: u32,
        side: Side,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Mac,
    Bh,
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyKind::Mac => "mac",
            StrategyKind::Bh => "bh",
        })
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mac" => Ok(StrategyKind::Mac),
            "bh" => Ok(StrategyKind::Bh),
            other => Err(format!("unknown strategy kind {other:?} (expected mac or bh)")),
        }
    }
}

impl StrategyConfig {
    pub fn kind(&self) -> StrategyKind {
        match self {
            StrategyConfig::Mac { .. } => StrategyKind::Mac,
            StrategyConfig::Bh { .. } => StrategyKind::Bh,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StrategyConfig::Mac { p1, p2 } => {
                for (name, w) in [("p1", p1), ("p2", p2)] {
                    if !(1..=MAC_MAX_WINDOW).contains(&w) {
                        return Err(validation(format!(
                            "MAC {name} must be in 1..={MAC_MAX_WINDOW}, got {w}"
                        )));
                    }
                }
            }
            StrategyConfig::Bh {
                entry, hold, stop_loss, ..
            } => {
                if !(1..=BH_MAX_ENTRY).contains(&entry) {
                    return Err(validation(format!(
                        "BH entry must be in 1..={BH_MAX_ENTRY}, got {entry}"
                    )));
                }
                if !(1..=BH_MAX_HOLD).contains(&hold) {
                    return Err(validation(format!("BH hold must be in 1..={BH_MAX_HOLD}, got {hold}")));
                }
                if stop_loss > BH_MAX_STOP_LOSS {
                    return Err(validation(format!(
                        "BH stop_loss must be in 0..={BH_MAX_STOP_LOSS}, got {stop_loss}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("strategy configs always serialize")
    }
}

impl fmt::Display for StrategyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyConfig::Mac { p1, p2 } => write!(f, "MAC(p1={p1}, p2={p2})"),
            StrategyConfig::Bh {
                entry,
                hold,
                stop_loss,
                side,
            } => write!(
                f,
                "BH(entry={entry}, hold={hold}, stop_loss={stop_loss}, side={})",
                i8::from(*side)
            ),
        }
    }
}

/// Positions held over each transition of a path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionSeries(Vec<Position>);

impl PositionSeries {
    pub fn new(positions: Vec<Position>) -> Self {
        PositionSeries(positions)
    }

    pub fn flat(len: usize) -> Self {
        PositionSeries(vec![Position::Flat; len])
    }

    pub fn as_slice(&self) -> &[Position] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn negated(&self) -> Self {
        PositionSeries(self.0.iter().map(|p| p.negate()).collect())
    }

    pub fn to_i8(&self) -> Vec<i8> {
        self.0.iter().map(|p| *p as i8).collect()
    }
}

/// Moving averages of one path for every window in `1..=max_window`.
///
/// `get(w, t)` is the mean of the `w` prices ending at index `t`, or `None`
/// when fewer than `w` prices are available. Each window is summed directly
/// rather than through prefix-sum differences, which would accumulate
/// cancellation error along long paths.
#[derive(Debug, Clone)]
pub struct MovingAverages {
    len: usize,
    max_window: usize,
    table: Vec<f64>,
}

impl MovingAverages {
    pub fn new(prices: &[f64], max_window: usize) -> Self {
        let len = prices.len();
        let mut table = vec![f64::NAN; max_window * len];
        for w in 1..=max_window {
            let row = &mut table[(w - 1) * len..w * len];
            for t in w.saturating_sub(1)..len {
                row[t] = prices[t + 1 - w..=t].iter().sum::<f64>() / w as f64;
            }
        }
        MovingAverages { len, max_window, table }
    }

    #[inline]
    pub fn get(&self, window: usize, t: usize) -> Option<f64> {
        debug_assert!(window >= 1 && window <= self.max_window && t < self.len);
        if t + 1 < window {
            None
        } else {
            Some(self.table[(window - 1) * self.len + t])
        }
    }

    /// MAC positions for `(p1, p2)` written into `out` (length `len − 1`).
    pub fn mac_into(&self, p1: usize, p2: usize, out: &mut Vec<Position>) {
        out.clear();
        let need = p1.max(p2);
        let r1 = &self.table[(p1 - 1) * self.len..p1 * self.len];
        let r2 = &self.table[(p2 - 1) * self.len..p2 * self.len];
        out.extend((0..self.len - 1).map(|t| {
            if t + 1 < need {
                Position::Flat
            } else if r1[t] > r2[t] {
                Position::Long
            } else if r1[t] < r2[t] {
                Position::Short
            } else {
                Position::Flat
            }
        }));
    }
}

/// Moving-average-cross positions: long when the `p1`-period average is above
/// the `p2`-period average, short when below, flat on ties and before both
/// averages have enough history.
pub fn mac_positions(path: &PricePath, p1: u32, p2: u32) -> Result<PositionSeries> {
    StrategyConfig::Mac { p1, p2 }.validate()?;
    let max_w = p1.max(p2) as usize;
    let ma = MovingAverages::new(path.values(), max_w);
    let mut out = Vec::with_capacity(path.steps());
    ma.mac_into(p1 as usize, p2 as usize, &mut out);
    Ok(PositionSeries(out))
}

/// Buy-and-hold positions written into `out`. Parameters must already be validated.
pub(crate) fn bh_into(prices: &[f64], entry: u32, hold: u32, stop_loss: u32, side: Side, out: &mut Vec<Position>) {
    let steps = prices.len() - 1;
    out.clear();
    out.resize(steps, Position::Flat);
    let pos = side.position();
    let sign = side.sign();
    let stop = stop_loss as f64;
    let mut month_start = 0;
    while month_start < steps {
        let open = month_start + entry as usize - 1;
        let end = (open + hold as usize).min(month_start + MONTH_LEN).min(steps);
        if open < end {
            let p_entry = prices[open];
            for t in open..end {
                if stop_loss > 0 && sign * (prices[t] - p_entry) <= -stop {
                    break;
                }
                out[t] = pos;
            }
        }
        month_start += MONTH_LEN;
    }
}

/// Buy-and-hold positions.
///
/// The path is cut into 30-day months. In each month the position is `side`
/// from day `entry` (1-based) for `hold` transitions, truncated at the month
/// end. With `stop_loss > 0` the trade is closed, without re-entry that
/// month, at the first held `t` where `side·(p(t) − p(entry)) ≤ −stop_loss`.
pub fn bh_positions(path: &PricePath, entry: u32, hold: u32, stop_loss: u32, side: Side) -> Result<PositionSeries> {
    StrategyConfig::Bh {
        entry,
        hold,
        stop_loss,
        side,
    }
    .validate()?;
    let mut out = Vec::with_capacity(path.steps());
    bh_into(path.values(), entry, hold, stop_loss, side, &mut out);
    Ok(PositionSeries(out))
}

pub fn positions(path: &PricePath, config: &StrategyConfig) -> Result<PositionSeries> {
    match *config {
        StrategyConfig::Mac { p1, p2 } => mac_positions(path, p1, p2),
        StrategyConfig::Bh {
            entry,
            hold,
            stop_loss,
            side,
        } => bh_positions(path, entry, hold, stop_loss, side),
    }
}

/// Every configuration of one strategy family, in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    kind: StrategyKind,
    configs: Vec<StrategyConfig>,
}

impl ParamGrid {
    /// A custom grid; every config must belong to `kind` and be valid.
    pub fn from_configs(kind: StrategyKind, configs: Vec<StrategyConfig>) -> Result<Self> {
        if configs.is_empty() {
            return Err(validation("a parameter grid must not be empty"));
        }
        for c in &configs {
            c.validate()?;
            if c.kind() != kind {
                return Err(validation(format!("{c} does not belong to a {kind} grid")));
            }
        }
        Ok(ParamGrid { kind, configs })
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }

    pub fn configs(&self) -> &[StrategyConfig] {
        &self.configs
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Largest MAC window in the grid (0 for BH grids).
    pub fn max_window(&self) -> usize {
        self.configs
            .iter()
            .map(|c| match *c {
                StrategyConfig::Mac { p1, p2 } => p1.max(p2) as usize,
                StrategyConfig::Bh { .. } => 0,
            })
            .max()
            .unwrap_or(0)
    }
}

/// The full grid for a family: 50×50 MAC windows or 30×30×21×2 BH settings.
pub fn enumerate_grid(kind: StrategyKind) -> ParamGrid {
    let configs = match kind {
        StrategyKind::Mac => (1..=MAC_MAX_WINDOW)
            .flat_map(|p1| (1..=MAC_MAX_WINDOW).map(move |p2| StrategyConfig::Mac { p1, p2 }))
            .collect(),
        StrategyKind::Bh => {
            let mut v = Vec::with_capacity(37_800);
            for entry in 1..=BH_MAX_ENTRY {
                for hold in 1..=BH_MAX_HOLD {
                    for stop_loss in 0..=BH_MAX_STOP_LOSS {
                        for side in [Side::Short, Side::Long] {
                            v.push(StrategyConfig::Bh {
                                entry,
                                hold,
                                stop_loss,
                                side,
                            });
                        }
                    }
                }
            }
            v
        }
    };
    ParamGrid { kind, configs }
}
