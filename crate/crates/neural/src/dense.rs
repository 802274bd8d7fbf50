use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD, Axis};
use rand::Rng;

use crate::error::{NeuralError, Result};
use crate::init::glorot_uniform;
use crate::tensor::Parameters;

/// Affine map `y = x·Wᵀ + b` with `W` of shape (out × in).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub weight: Array2<f64>,
    pub bias: Option<Array1<f64>>,
}

impl DenseParams {
    pub fn zeros(input: usize, output: usize, bias: bool) -> Self {
        DenseParams {
            weight: Array2::zeros((output, input)),
            bias: bias.then(|| Array1::zeros(output)),
        }
    }

    pub fn init<R: Rng + ?Sized>(input: usize, output: usize, bias: bool, rng: &mut R) -> Self {
        let mut p = Self::zeros(input, output, bias);
        glorot_uniform(&mut p.weight, input, output, rng);
        p
    }

    pub fn input_size(&self) -> usize {
        self.weight.ncols()
    }

    pub fn output_size(&self) -> usize {
        self.weight.nrows()
    }

    pub fn count(input: usize, output: usize, bias: bool) -> usize {
        output * input + if bias { output } else { 0 }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_size(), self.output_size(), self.bias.is_some())
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.input_size() {
            return Err(NeuralError::Shape(format!(
                "dense layer expects width {}, got {}",
                self.input_size(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// Applies the layer to a batch of rows.
    pub fn forward(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        let mut y = x.dot(&self.weight.t());
        if let Some(b) = &self.bias {
            y += b;
        }
        Ok(y)
    }

    /// Accumulates parameter gradients into `grads` and returns `∂L/∂x`.
    pub fn backward(&self, x: &Array2<f64>, dy: &Array2<f64>, grads: &mut DenseParams) -> Result<Array2<f64>> {
        self.check_input(x)?;
        if dy.ncols() != self.output_size() || dy.nrows() != x.nrows() {
            return Err(NeuralError::Shape(format!(
                "upstream gradient {:?} does not match output ({}, {})",
                dy.shape(),
                x.nrows(),
                self.output_size()
            )));
        }
        grads.weight += &dy.t().dot(x);
        if let Some(gb) = &mut grads.bias {
            *gb += &dy.sum_axis(Axis(0));
        }
        Ok(dy.dot(&self.weight))
    }
}

impl Parameters for DenseParams {
    fn tensors(&self) -> Vec<(String, ArrayViewD<'_, f64>)> {
        let mut v = vec![("weight".to_string(), self.weight.view().into_dyn())];
        if let Some(b) = &self.bias {
            v.push(("bias".to_string(), b.view().into_dyn()));
        }
        v
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        let mut v = vec![self.weight.view_mut().into_dyn()];
        if let Some(b) = &mut self.bias {
            v.push(b.view_mut().into_dyn());
        }
        v
    }
}
