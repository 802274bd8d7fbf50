use ndarray::{ArrayViewD, ArrayViewMutD};
use serde::{Deserialize, Serialize};

use crate::error::{NeuralError, Result};

/// A named, shaped flat buffer of `f64` in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorBuffer {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl TensorBuffer {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(NeuralError::Shape(format!(
                "shape {shape:?} needs {n} elements, got {}",
                data.len()
            )));
        }
        Ok(TensorBuffer { shape, data })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// A fixed, ordered collection of named parameter tensors.
///
/// Gradients use the same type as the parameters they belong to, so the
/// flat layouts of a parameter set and its gradient always agree.
pub trait Parameters {
    fn tensors(&self) -> Vec<(String, ArrayViewD<'_, f64>)>;

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>>;

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for (_, t) in self.tensors() {
            out.extend(t.iter().copied());
        }
        out
    }

    fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        let n = self.num_params();
        if flat.len() != n {
            return Err(NeuralError::Shape(format!(
                "expected {n} parameters, got {}",
                flat.len()
            )));
        }
        let mut off = 0;
        for mut t in self.tensors_mut() {
            for (dst, src) in t.iter_mut().zip(&flat[off..]) {
                *dst = *src;
            }
            off += t.len();
        }
        Ok(())
    }

    fn to_buffers(&self) -> Vec<(String, TensorBuffer)> {
        self.tensors()
            .into_iter()
            .map(|(name, t)| {
                let buf = TensorBuffer {
                    shape: t.shape().to_vec(),
                    data: t.iter().copied().collect(),
                };
                (name, buf)
            })
            .collect()
    }

    /// Loads tensors by name; every tensor must be present with a matching shape.
    fn load_buffers(&mut self, buffers: &[(String, TensorBuffer)]) -> Result<()> {
        let names: Vec<(String, Vec<usize>)> = self
            .tensors()
            .into_iter()
            .map(|(n, t)| (n, t.shape().to_vec()))
            .collect();
        let mut flat = Vec::with_capacity(self.num_params());
        for (name, shape) in &names {
            let buf = buffers
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, b)| b)
                .ok_or_else(|| NeuralError::Shape(format!("missing tensor {name}")))?;
            if &buf.shape != shape {
                return Err(NeuralError::Shape(format!(
                    "tensor {name}: expected shape {shape:?}, got {:?}",
                    buf.shape
                )));
            }
            flat.extend_from_slice(&buf.data);
        }
        self.set_flat(&flat)
    }

    /// Hash of the exact parameter bits (FNV-1a), used to detect stale forward records.
    fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for (_, t) in self.tensors() {
            for v in t.iter() {
                h ^= v.to_bits();
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }

    fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }
}

/// Prefixes child tensor names, for composite parameter sets.
pub fn prefixed<'a>(prefix: &str, tensors: Vec<(String, ArrayViewD<'a, f64>)>) -> Vec<(String, ArrayViewD<'a, f64>)> {
    tensors.into_iter().map(|(n, t)| (format!("{prefix}.{n}"), t)).collect()
}
