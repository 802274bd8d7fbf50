use serde::{Deserialize, Serialize};
use synthbt_core::{PathSet, PricePath};

use crate::error::{validation, Result};

/// Min–max normalization into `[−1/scaling, 1/scaling]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min: f64,
    pub max: f64,
    pub scaling: f64,
}

impl Scaler {
    pub fn new(min: f64, max: f64, scaling: f64) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() || min >= max {
            return Err(validation(format!("degenerate data range [{min}, {max}]")));
        }
        if !(scaling >= 1.0 && scaling.is_finite()) {
            return Err(validation("scaling must be a finite number >= 1"));
        }
        Ok(Scaler { min, max, scaling })
    }

    pub fn fit(data: &PathSet, scaling: f64) -> Result<Self> {
        let (min, max) = data.value_range();
        Self::new(min, max, scaling)
    }

    pub fn transform(&self, x: f64) -> f64 {
        (2.0 * (x - self.min) / (self.max - self.min) - 1.0) / self.scaling
    }

    pub fn inverse(&self, y: f64) -> f64 {
        (y * self.scaling + 1.0) / 2.0 * (self.max - self.min) + self.min
    }

    pub fn transform_path(&self, path: &PricePath) -> Vec<f64> {
        path.values().iter().map(|x| self.transform(*x)).collect()
    }

    pub fn inverse_values(&self, ys: &[f64]) -> Vec<f64> {
        ys.iter().map(|y| self.inverse(*y)).collect()
    }

    /// Price interval reachable from generator outputs in (−1, 1).
    pub fn output_bounds(&self) -> (f64, f64) {
        (self.inverse(-1.0), self.inverse(1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        let s = Scaler::new(0.0, 10.0, 1.0).unwrap();
        assert_eq!(s.transform(0.0), -1.0);
        assert_eq!(s.transform(10.0), 1.0);
        assert_eq!(s.transform(5.0), 0.0);
        let s = Scaler::new(0.0, 10.0, 2.0).unwrap();
        assert_eq!(s.transform(0.0), -0.5);
        assert_eq!(s.transform(10.0), 0.5);
        assert_eq!(s.output_bounds(), (-5.0, 15.0));
    }

    #[test]
    fn constant_data_rejected() {
        assert!(Scaler::new(3.0, 3.0, 2.0).is_err());
        assert!(Scaler::new(0.0, 1.0, 0.5).is_err());
    }
}
