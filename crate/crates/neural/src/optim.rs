use serde::{Deserialize, Serialize};

use crate::error::{NeuralError, Result};
use crate::tensor::Parameters;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moment accumulators over a flattened parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl OptimState {
    pub fn new(num_params: usize, config: AdamConfig) -> Self {
        OptimState {
            config,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    pub fn for_params<P: Parameters>(params: &P, config: AdamConfig) -> Self {
        Self::new(params.num_params(), config)
    }
}

/// One bias-corrected Adam update. Parameters are left untouched if any
/// gradient entry is non-finite.
pub fn optim_step<P: Parameters>(params: &mut P, grads: &P, state: &mut OptimState) -> Result<()> {
    let g = grads.to_flat();
    let n = params.num_params();
    if g.len() != n || state.m.len() != n {
        return Err(NeuralError::Shape(format!(
            "{n} parameters, {} gradients, {} accumulators",
            g.len(),
            state.m.len()
        )));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(NeuralError::NonFinite("gradients".into()));
    }
    state.step += 1;
    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let bc1 = 1.0 - beta1.powi(state.step as i32);
    let bc2 = 1.0 - beta2.powi(state.step as i32);
    let mut flat = params.to_flat();
    for i in 0..n {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g[i] * g[i];
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        flat[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
    }
    params.set_flat(&flat)
}

pub const DEFAULT_CLIP_NORM: f64 = 5.0;

/// Rescales `grads` so their global L2 norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_global_norm<P: Parameters>(grads: &mut P, max_norm: f64) -> f64 {
    let norm = grads
        .tensors()
        .iter()
        .map(|(_, t)| t.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let k = max_norm / norm;
        for mut t in grads.tensors_mut() {
            t.mapv_inplace(|v| v * k);
        }
    }
    norm
}
