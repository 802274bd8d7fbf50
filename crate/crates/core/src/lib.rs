//! Backtesting on ensembles of synthetic price paths.
//!
//! - [`process`]: random walk, white noise, GBM and AR(2) simulators
//! - [`strategy`]: moving-average-cross and buy-and-hold position rules
//! - [`backtest`]: P&L, Sharpe ratios, grid search, heatmaps
//! - [`stats`]: empirical CDFs, Kolmogorov–Smirnov tests, R²
//! - [`evaluation`]: moment fits, normality checks, distribution comparison

pub mod backtest;
pub mod error;
pub mod evaluation;
pub mod process;
pub mod rng;
pub mod stats;
pub mod strategy;

pub use error::{Error, Result};
pub use process::{PathOrigin, PathSet, PricePath, ProcessSpec};
pub use strategy::{StrategyConfig, StrategyKind};
