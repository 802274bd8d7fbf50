use ndarray::{concatenate, s, Array2, Axis};

use crate::error::{NeuralError, Result};
use crate::lstm::{lstm_backward, lstm_forward, LstmParams, LstmRecord, LstmState};

#[derive(Debug, Clone)]
pub struct BiLstmRecord {
    fwd: LstmRecord,
    bwd: LstmRecord,
}

impl BiLstmRecord {
    pub fn len(&self) -> usize {
        self.fwd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fwd.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct BiLstmOutput {
    /// One (batch × 2h) matrix per timestep: forward state ‖ backward state.
    pub states: Vec<Array2<f64>>,
    pub record: BiLstmRecord,
}

#[derive(Debug, Clone)]
pub struct BiLstmGradients {
    pub fwd: LstmParams,
    pub bwd: LstmParams,
    pub inputs: Vec<Array2<f64>>,
}

/// Runs `fwd` over the inputs and `bwd` over the reversed inputs from zero
/// states, pairing both states at each original timestep.
pub fn bilstm_forward(fwd: &LstmParams, bwd: &LstmParams, inputs: &[Array2<f64>]) -> Result<BiLstmOutput> {
    let h = fwd.hidden_size();
    if bwd.hidden_size() != h || bwd.input_size() != fwd.input_size() {
        return Err(NeuralError::Shape(format!(
            "directions disagree: forward ({}, {h}), backward ({}, {})",
            fwd.input_size(),
            bwd.input_size(),
            bwd.hidden_size()
        )));
    }
    let batch = inputs.first().map_or(0, |x| x.nrows());
    let f = lstm_forward(fwd, inputs, &LstmState::zeros(batch, h))?;
    let reversed: Vec<Array2<f64>> = inputs.iter().rev().cloned().collect();
    let b = lstm_forward(bwd, &reversed, &LstmState::zeros(batch, h))?;
    let n = inputs.len();
    let states = (0..n)
        .map(|t| concatenate(Axis(1), &[f.hidden[t].view(), b.hidden[n - 1 - t].view()]).expect("equal batch"))
        .collect();
    Ok(BiLstmOutput {
        states,
        record: BiLstmRecord {
            fwd: f.record,
            bwd: b.record,
        },
    })
}

pub fn bilstm_backward(
    fwd: &LstmParams,
    bwd: &LstmParams,
    record: &BiLstmRecord,
    d_states: &[Array2<f64>],
) -> Result<BiLstmGradients> {
    let h = fwd.hidden_size();
    let n = record.len();
    if d_states.len() != n {
        return Err(NeuralError::IncompleteRecord(format!(
            "record has {n} steps, upstream has {}",
            d_states.len()
        )));
    }
    if let Some(d) = d_states.iter().find(|d| d.ncols() != 2 * h) {
        return Err(NeuralError::Shape(format!(
            "upstream width must be {}, got {}",
            2 * h,
            d.ncols()
        )));
    }
    let d_f: Vec<Array2<f64>> = d_states.iter().map(|d| d.slice(s![.., ..h]).to_owned()).collect();
    let d_b: Vec<Array2<f64>> = d_states.iter().rev().map(|d| d.slice(s![.., h..]).to_owned()).collect();
    let gf = lstm_backward(fwd, &record.fwd, &d_f, None)?;
    let gb = lstm_backward(bwd, &record.bwd, &d_b, None)?;
    let inputs = (0..n).map(|t| &gf.inputs[t] + &gb.inputs[n - 1 - t]).collect();
    Ok(BiLstmGradients {
        fwd: gf.params,
        bwd: gb.params,
        inputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;

    #[test]
    fn palindrome_symmetry() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let p = LstmParams::init(2, 3, &mut rng);
        let xs: Vec<Array2<f64>> = [0.1, -0.4, 0.8, -0.4, 0.1]
            .iter()
            .map(|v| array![[*v, 1.0 - v]])
            .collect();
        let out = bilstm_forward(&p, &p, &xs).unwrap();
        let n = xs.len();
        for t in 0..n {
            let a = &out.states[t];
            let b = &out.states[n - 1 - t];
            assert_eq!(a.slice(s![.., ..3]), b.slice(s![.., 3..]));
            assert_eq!(a.slice(s![.., 3..]), b.slice(s![.., ..3]));
        }
    }

    #[test]
    fn zero_params_and_width() {
        let p = LstmParams::zeros(2, 4);
        let xs = vec![array![[1.0, 2.0], [3.0, 4.0]]; 3];
        let out = bilstm_forward(&p, &p, &xs).unwrap();
        for s in &out.states {
            assert_eq!(s.dim(), (2, 8));
            assert!(s.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn mismatched_directions_rejected() {
        let err = bilstm_forward(&LstmParams::zeros(2, 4), &LstmParams::zeros(2, 3), &[]).unwrap_err();
        assert!(matches!(err, NeuralError::Shape(_)));
    }
}
