use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

pub const LATENT_DIM: usize = 5;

/// Hyperparameters of a GAN run. `seq_len` counts steps, so each modelled
/// path has `seq_len + 1` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GanConfig {
    pub latent_dim: usize,
    pub hidden_units: usize,
    pub seq_len: usize,
    pub batch_size: usize,
    pub scaling: f64,
    pub learning_rate: f64,
    /// Adam moment decay rates, shared by both networks.
    pub beta1: f64,
    pub beta2: f64,
    /// Generator learning rate; `None` uses `learning_rate`.
    pub g_learning_rate: Option<f64>,
    /// Discriminator updates per batch before the single generator update.
    pub d_steps: usize,
    pub max_batches: usize,
    pub eval_every: usize,
    pub seed: u64,
    /// Stop once both R² values reach this level; `None` trains to `max_batches`.
    pub early_stop: Option<f64>,
    pub clip_norm: f64,
}

impl Default for GanConfig {
    fn default() -> Self {
        GanConfig {
            latent_dim: LATENT_DIM,
            hidden_units: 50,
            seq_len: 30,
            batch_size: 50,
            scaling: 2.0,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            g_learning_rate: None,
            d_steps: 1,
            max_batches: 10_000,
            eval_every: 100,
            seed: 0,
            early_stop: Some(0.99),
            clip_norm: synthbt_neural::DEFAULT_CLIP_NORM,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.latent_dim != LATENT_DIM {
            return Err(validation(format!("latent_dim must be {LATENT_DIM}")));
        }
        if self.hidden_units == 0 {
            return Err(validation("hidden_units must be at least 1"));
        }
        if self.seq_len == 0 {
            return Err(validation("seq_len must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(validation("batch_size must be at least 1"));
        }
        if !(self.scaling >= 1.0 && self.scaling.is_finite()) {
            return Err(validation("scaling must be a finite number >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(validation("learning_rate must be positive"));
        }
        if self.g_learning_rate.is_some_and(|lr| !(lr > 0.0 && lr.is_finite())) {
            return Err(validation("g_learning_rate must be positive"));
        }
        if self.d_steps == 0 {
            return Err(validation("d_steps must be at least 1"));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(validation("beta1 and beta2 must be in [0, 1)"));
        }
        if self.eval_every == 0 {
            return Err(validation("eval_every must be at least 1"));
        }
        if self.clip_norm.is_nan() || self.clip_norm <= 0.0 {
            return Err(validation("clip_norm must be positive"));
        }
        Ok(())
    }
}
