use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayViewD, ArrayViewMutD, Axis, Zip};
use rand::Rng;

use crate::activation::sigmoid;
use crate::error::{NeuralError, Result};
use crate::init::glorot_uniform;
use crate::tensor::Parameters;

/// LSTM weights with the four gates stacked row-wise in the order
/// input, forget, cell candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    /// (4h × d)
    pub w_input: Array2<f64>,
    /// (4h × h)
    pub w_recurrent: Array2<f64>,
    /// (4h)
    pub bias: Array1<f64>,
}

pub const FORGET_BIAS_INIT: f64 = 1.0;

impl LstmParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        LstmParams {
            w_input: Array2::zeros((4 * hidden, input)),
            w_recurrent: Array2::zeros((4 * hidden, hidden)),
            bias: Array1::zeros(4 * hidden),
        }
    }

    /// Glorot-uniform weights per gate block, zero biases except the forget gate.
    pub fn init<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(input, hidden);
        for g in 0..4 {
            let mut wi = p.w_input.slice(s![g * hidden..(g + 1) * hidden, ..]).to_owned();
            glorot_uniform(&mut wi, input, hidden, rng);
            p.w_input.slice_mut(s![g * hidden..(g + 1) * hidden, ..]).assign(&wi);
            let mut wr = p.w_recurrent.slice(s![g * hidden..(g + 1) * hidden, ..]).to_owned();
            glorot_uniform(&mut wr, hidden, hidden, rng);
            p.w_recurrent
                .slice_mut(s![g * hidden..(g + 1) * hidden, ..])
                .assign(&wr);
        }
        p.bias.slice_mut(s![hidden..2 * hidden]).fill(FORGET_BIAS_INIT);
        p
    }

    pub fn hidden_size(&self) -> usize {
        self.w_recurrent.ncols()
    }

    pub fn input_size(&self) -> usize {
        self.w_input.ncols()
    }

    pub fn count(input: usize, hidden: usize) -> usize {
        4 * hidden * (hidden + input + 1)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_size(), self.hidden_size())
    }
}

impl Parameters for LstmParams {
    fn tensors(&self) -> Vec<(String, ArrayViewD<'_, f64>)> {
        vec![
            ("w_input".to_string(), self.w_input.view().into_dyn()),
            ("w_recurrent".to_string(), self.w_recurrent.view().into_dyn()),
            ("bias".to_string(), self.bias.view().into_dyn()),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        vec![
            self.w_input.view_mut().into_dyn(),
            self.w_recurrent.view_mut().into_dyn(),
            self.bias.view_mut().into_dyn(),
        ]
    }
}

/// Hidden and cell state for a batch, each (batch × h).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Array2<f64>,
    pub c: Array2<f64>,
}

impl LstmState {
    pub fn zeros(batch: usize, hidden: usize) -> Self {
        LstmState {
            h: Array2::zeros((batch, hidden)),
            c: Array2::zeros((batch, hidden)),
        }
    }
}

#[derive(Debug, Clone)]
struct StepCache {
    x: Array2<f64>,
    h_prev: Array2<f64>,
    c_prev: Array2<f64>,
    /// activated gates (batch × 4h)
    gates: Array2<f64>,
    tanh_c: Array2<f64>,
}

/// Everything the backward pass needs from a forward evaluation.
#[derive(Debug, Clone)]
pub struct LstmRecord {
    fingerprint: u64,
    steps: Vec<StepCache>,
}

impl LstmRecord {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    fn batch(&self) -> usize {
        self.steps.first().map_or(0, |s| s.x.nrows())
    }
}

#[derive(Debug, Clone)]
pub struct LstmOutput {
    /// One (batch × h) matrix per timestep.
    pub hidden: Vec<Array2<f64>>,
    pub final_state: LstmState,
    pub record: LstmRecord,
}

#[derive(Debug, Clone)]
pub struct LstmGradients {
    pub params: LstmParams,
    pub inputs: Vec<Array2<f64>>,
    pub initial: LstmState,
}

/// Runs the recurrence over `inputs`, each a (batch × d) matrix.
pub fn lstm_forward(params: &LstmParams, inputs: &[Array2<f64>], initial: &LstmState) -> Result<LstmOutput> {
    let h = params.hidden_size();
    let d = params.input_size();
    let batch = initial.h.nrows();
    if initial.h.dim() != (batch, h) || initial.c.dim() != (batch, h) {
        return Err(NeuralError::Shape(format!(
            "initial state must be ({batch}, {h}), got {:?} and {:?}",
            initial.h.dim(),
            initial.c.dim()
        )));
    }
    let mut hidden = Vec::with_capacity(inputs.len());
    let mut steps = Vec::with_capacity(inputs.len());
    let mut h_prev = initial.h.clone();
    let mut c_prev = initial.c.clone();
    for (t, x) in inputs.iter().enumerate() {
        if x.dim() != (batch, d) {
            return Err(NeuralError::Shape(format!(
                "input at step {t} must be ({batch}, {d}), got {:?}",
                x.dim()
            )));
        }
        let mut z = Array2::from_shape_fn((batch, 4 * h), |(_, j)| params.bias[j]);
        general_mat_mul(1.0, x, &params.w_input.t(), 1.0, &mut z);
        general_mat_mul(1.0, &h_prev, &params.w_recurrent.t(), 1.0, &mut z);
        for mut row in z.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if (2 * h..3 * h).contains(&j) {
                    v.tanh()
                } else {
                    sigmoid(*v)
                };
            }
        }
        let mut c = Array2::zeros((batch, h));
        let mut tanh_c = Array2::zeros((batch, h));
        let mut h_new = Array2::zeros((batch, h));
        {
            let gi = z.slice(s![.., 0..h]);
            let gf = z.slice(s![.., h..2 * h]);
            let gg = z.slice(s![.., 2 * h..3 * h]);
            let go = z.slice(s![.., 3 * h..]);
            Zip::from(&mut c)
                .and(&gi)
                .and(&gf)
                .and(&gg)
                .and(&c_prev)
                .for_each(|c, &i, &f, &g, &cp| *c = f * cp + i * g);
            Zip::from(&mut tanh_c).and(&c).for_each(|tc, &c| *tc = c.tanh());
            Zip::from(&mut h_new)
                .and(&go)
                .and(&tanh_c)
                .for_each(|hn, &o, &tc| *hn = o * tc);
        }
        steps.push(StepCache {
            x: x.clone(),
            h_prev,
            c_prev,
            gates: z,
            tanh_c,
        });
        hidden.push(h_new.clone());
        h_prev = h_new;
        c_prev = c;
    }
    Ok(LstmOutput {
        hidden,
        final_state: LstmState { h: h_prev, c: c_prev },
        record: LstmRecord {
            fingerprint: params.fingerprint(),
            steps,
        },
    })
}

/// Backpropagation through time. `d_hidden[t]` is `∂L/∂h_t`; `d_final`
/// optionally adds gradients on the final state.
pub fn lstm_backward(
    params: &LstmParams,
    record: &LstmRecord,
    d_hidden: &[Array2<f64>],
    d_final: Option<&LstmState>,
) -> Result<LstmGradients> {
    if record.fingerprint != params.fingerprint() {
        return Err(NeuralError::StaleRecord);
    }
    if d_hidden.len() != record.len() {
        return Err(NeuralError::IncompleteRecord(format!(
            "record has {} steps, upstream has {}",
            record.len(),
            d_hidden.len()
        )));
    }
    let h = params.hidden_size();
    let batch = record.batch();
    let mut grads = params.zeros_like();
    let mut d_inputs = vec![Array2::zeros((0, 0)); record.len()];
    let (mut dh_next, mut dc_next) = match d_final {
        Some(s) => (s.h.clone(), s.c.clone()),
        None => (Array2::zeros((batch, h)), Array2::zeros((batch, h))),
    };
    let mut dz = Array2::zeros((batch, 4 * h));
    for t in (0..record.len()).rev() {
        let st = &record.steps[t];
        if d_hidden[t].dim() != (batch, h) {
            return Err(NeuralError::Shape(format!(
                "upstream gradient at step {t} must be ({batch}, {h}), got {:?}",
                d_hidden[t].dim()
            )));
        }
        let dh = &d_hidden[t] + &dh_next;
        let mut dc_prev = Array2::zeros((batch, h));
        for b in 0..batch {
            let gates = st.gates.row(b);
            let mut dzr = dz.row_mut(b);
            for k in 0..h {
                let (i, f, g, o) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
                let tc = st.tanh_c[(b, k)];
                let dhk = dh[(b, k)];
                let dc = dc_next[(b, k)] + dhk * o * (1.0 - tc * tc);
                dzr[k] = dc * g * i * (1.0 - i);
                dzr[h + k] = dc * st.c_prev[(b, k)] * f * (1.0 - f);
                dzr[2 * h + k] = dc * i * (1.0 - g * g);
                dzr[3 * h + k] = dhk * tc * o * (1.0 - o);
                dc_prev[(b, k)] = dc * f;
            }
        }
        general_mat_mul(1.0, &dz.t(), &st.x, 1.0, &mut grads.w_input);
        general_mat_mul(1.0, &dz.t(), &st.h_prev, 1.0, &mut grads.w_recurrent);
        grads.bias += &dz.sum_axis(Axis(0));
        d_inputs[t] = dz.dot(&params.w_input);
        dh_next = dz.dot(&params.w_recurrent);
        dc_next = dc_prev;
    }
    Ok(LstmGradients {
        params: grads,
        inputs: d_inputs,
        initial: LstmState { h: dh_next, c: dc_next },
    })
}
