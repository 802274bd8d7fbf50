use ndarray::{concatenate, s, Array2, Array3, ArrayViewD, ArrayViewMutD, Axis};
use synthbt_core::rng::{derive_seed, standard_normal, substream};
use synthbt_core::{PathOrigin, PathSet, PricePath};
use synthbt_neural::activation::{sigmoid, softplus};
use synthbt_neural::{
    bilstm_backward, bilstm_forward, lstm_backward, lstm_forward, prefixed, BiLstmOutput, DenseParams, LstmOutput,
    LstmParams, LstmState, NeuralError, Parameters, DISCRIMINATOR_INPUT, GENERATOR_INPUT,
};

use crate::config::{GanConfig, LATENT_DIM};
use crate::error::{validation, Result};
use crate::scaler::Scaler;

/// LSTM over `[latent ‖ t/T]` followed by a dense map to one value.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub lstm: LstmParams,
    pub head: DenseParams,
}

/// Bidirectional LSTM over `[value ‖ t/T]` with a bias-free head producing
/// two logits per timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorParams {
    pub fwd: LstmParams,
    pub bwd: LstmParams,
    pub head: DenseParams,
}

impl GeneratorParams {
    pub fn init<R: rand::Rng + ?Sized>(hidden: usize, rng: &mut R) -> Self {
        GeneratorParams {
            lstm: LstmParams::init(GENERATOR_INPUT, hidden, rng),
            head: DenseParams::init(hidden, 1, true, rng),
        }
    }
}

impl DiscriminatorParams {
    pub fn init<R: rand::Rng + ?Sized>(hidden: usize, rng: &mut R) -> Self {
        DiscriminatorParams {
            fwd: LstmParams::init(DISCRIMINATOR_INPUT, hidden, rng),
            bwd: LstmParams::init(DISCRIMINATOR_INPUT, hidden, rng),
            head: DenseParams::init(2 * hidden, 2, false, rng),
        }
    }
}

impl Parameters for GeneratorParams {
    fn tensors(&self) -> Vec<(String, ArrayViewD<'_, f64>)> {
        let mut v = prefixed("generator.lstm", self.lstm.tensors());
        v.extend(prefixed("generator.head", self.head.tensors()));
        v
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        let mut v = self.lstm.tensors_mut();
        v.extend(self.head.tensors_mut());
        v
    }
}

impl Parameters for DiscriminatorParams {
    fn tensors(&self) -> Vec<(String, ArrayViewD<'_, f64>)> {
        let mut v = prefixed("discriminator.fwd", self.fwd.tensors());
        v.extend(prefixed("discriminator.bwd", self.bwd.tensors()));
        v.extend(prefixed("discriminator.head", self.head.tensors()));
        v
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        let mut v = self.fwd.tensors_mut();
        v.extend(self.bwd.tensors_mut());
        v.extend(self.head.tensors_mut());
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GanModel {
    pub config: GanConfig,
    pub generator: GeneratorParams,
    pub discriminator: DiscriminatorParams,
    pub scaler: Scaler,
    pub steps_trained: u64,
}

impl GanModel {
    /// Freshly initialized networks, seeded from `config.seed`.
    pub fn new(config: GanConfig, scaler: Scaler) -> Result<Self> {
        config.validate()?;
        let mut rng = substream(derive_seed(config.seed, INIT_LABEL), 0);
        let generator = GeneratorParams::init(config.hidden_units, &mut rng);
        let discriminator = DiscriminatorParams::init(config.hidden_units, &mut rng);
        Ok(GanModel {
            config,
            generator,
            discriminator,
            scaler,
            steps_trained: 0,
        })
    }

    pub fn num_params(&self) -> usize {
        self.generator.num_params() + self.discriminator.num_params()
    }
}

pub(crate) const INIT_LABEL: u64 = 1;

/// Normalized time feature `t / T` for values `t = 0..=steps`.
fn time_column(t: usize, trained_steps: usize, batch: usize) -> Array2<f64> {
    Array2::from_elem((batch, 1), t as f64 / trained_steps as f64)
}

/// `n` latent sequences of `len` five-dimensional standard normal vectors,
/// shaped (n, len, 5). Sequence `i` is drawn from substream `i` of `seed`.
pub fn sample_latent(n: usize, len: usize, seed: u64) -> Array3<f64> {
    let mut out = Array3::zeros((n, len, LATENT_DIM));
    for (i, mut seq) in out.outer_iter_mut().enumerate() {
        let mut rng = substream(seed, i as u64);
        seq.iter_mut().for_each(|v| *v = standard_normal(&mut rng));
    }
    out
}

/// Time-major view of a latent tensor: one (n × 5) matrix per timestep.
pub fn latent_steps(z: &Array3<f64>) -> Vec<Array2<f64>> {
    (0..z.shape()[1]).map(|t| z.slice(s![.., t, ..]).to_owned()).collect()
}

pub(crate) struct GeneratorPass {
    lstm: LstmOutput,
    /// tanh outputs, one (batch × 1) matrix per timestep
    pub out: Vec<Array2<f64>>,
}

pub(crate) fn generator_forward(g: &GeneratorParams, z: &[Array2<f64>], trained_steps: usize) -> Result<GeneratorPass> {
    let batch = z.first().map_or(0, |m| m.nrows());
    let inputs: Vec<Array2<f64>> = z
        .iter()
        .enumerate()
        .map(|(t, zt)| concatenate(Axis(1), &[zt.view(), time_column(t, trained_steps, batch).view()]))
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| validation(format!("latent shape: {e}")))?;
    let lstm = lstm_forward(&g.lstm, &inputs, &LstmState::zeros(batch, g.lstm.hidden_size()))?;
    let out = lstm
        .hidden
        .iter()
        .map(|h| g.head.forward(h).map(|y| y.mapv(f64::tanh)))
        .collect::<std::result::Result<_, _>>()?;
    Ok(GeneratorPass { lstm, out })
}

pub(crate) fn generator_backward(
    g: &GeneratorParams,
    pass: &GeneratorPass,
    d_out: &[Array2<f64>],
) -> Result<GeneratorParams> {
    let mut head = g.head.zeros_like();
    let mut d_hidden = Vec::with_capacity(d_out.len());
    for ((h, y), dy) in pass.lstm.hidden.iter().zip(&pass.out).zip(d_out) {
        let d_pre = dy * &y.mapv(|v| 1.0 - v * v);
        d_hidden.push(g.head.backward(h, &d_pre, &mut head)?);
    }
    let lg = lstm_backward(&g.lstm, &pass.lstm.record, &d_hidden, None)?;
    Ok(GeneratorParams { lstm: lg.params, head })
}

pub(crate) struct DiscriminatorPass {
    bi: BiLstmOutput,
    /// one (batch × 1) matrix of logits per timestep
    pub logits: Vec<Array2<f64>>,
}

pub(crate) fn discriminator_forward(
    d: &DiscriminatorParams,
    values: &[Array2<f64>],
    trained_steps: usize,
) -> Result<DiscriminatorPass> {
    let batch = values.first().map_or(0, |m| m.nrows());
    let inputs: Vec<Array2<f64>> = values
        .iter()
        .enumerate()
        .map(|(t, v)| concatenate(Axis(1), &[v.view(), time_column(t, trained_steps, batch).view()]))
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| validation(format!("value shape: {e}")))?;
    let bi = bilstm_forward(&d.fwd, &d.bwd, &inputs)?;
    let logits = bi
        .states
        .iter()
        .map(|st| {
            d.head
                .forward(st)
                .map(|l| l.mean_axis(Axis(1)).expect("two logits").insert_axis(Axis(1)))
        })
        .collect::<std::result::Result<_, _>>()?;
    Ok(DiscriminatorPass { bi, logits })
}

/// Returns parameter gradients and the gradient with respect to each input value.
pub(crate) fn discriminator_backward(
    d: &DiscriminatorParams,
    pass: &DiscriminatorPass,
    d_logits: &[Array2<f64>],
) -> Result<(DiscriminatorParams, Vec<Array2<f64>>)> {
    let mut head = d.head.zeros_like();
    let mut d_states = Vec::with_capacity(d_logits.len());
    for (st, dl) in pass.bi.states.iter().zip(d_logits) {
        let dl2 = concatenate(Axis(1), &[dl.view(), dl.view()]).expect("column vectors") * 0.5;
        d_states.push(d.head.backward(st, &dl2, &mut head)?);
    }
    let g = bilstm_backward(&d.fwd, &d.bwd, &pass.bi.record, &d_states)?;
    let d_values = g.inputs.iter().map(|di| di.slice(s![.., 0..1]).to_owned()).collect();
    Ok((
        DiscriminatorParams {
            fwd: g.fwd,
            bwd: g.bwd,
            head,
        },
        d_values,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversarialLosses {
    pub d_loss: f64,
    pub g_loss: f64,
}

fn check_logits(real: &[Array2<f64>], fake: &[Array2<f64>]) -> Result<()> {
    if real.len() != fake.len() || real.iter().zip(fake).any(|(r, f)| r.dim() != f.dim()) {
        return Err(validation("real and fake logits must have equal shapes"));
    }
    if real.iter().chain(fake).any(|m| m.iter().any(|v| !v.is_finite())) {
        return Err(NeuralError::NonFinite("discriminator logits".into()).into());
    }
    Ok(())
}

fn count(m: &[Array2<f64>]) -> f64 {
    m.iter().map(|x| x.len()).sum::<usize>() as f64
}

/// Per-timestep cross-entropy losses from discriminator logits.
///
/// `d_loss = ½ (mean softplus(−real) + mean softplus(fake))` and
/// `g_loss = mean softplus(−fake)`.
pub fn adversarial_losses(real: &[Array2<f64>], fake: &[Array2<f64>]) -> Result<AdversarialLosses> {
    check_logits(real, fake)?;
    let n = count(real);
    let sum =
        |m: &[Array2<f64>], f: &dyn Fn(f64) -> f64| m.iter().map(|x| x.iter().map(|v| f(*v)).sum::<f64>()).sum::<f64>();
    let d_real = sum(real, &|v| softplus(-v)) / n;
    let d_fake = sum(fake, &softplus) / n;
    Ok(AdversarialLosses {
        d_loss: 0.5 * (d_real + d_fake),
        g_loss: sum(fake, &|v| softplus(-v)) / n,
    })
}

/// Gradients of `d_loss` with respect to the real and fake logits.
pub(crate) fn d_loss_logit_grads(real: &[Array2<f64>], fake: &[Array2<f64>]) -> (Vec<Array2<f64>>, Vec<Array2<f64>>) {
    let n = count(real);
    let dr = real.iter().map(|m| m.mapv(|v| -0.5 * sigmoid(-v) / n)).collect();
    let df = fake.iter().map(|m| m.mapv(|v| 0.5 * sigmoid(v) / n)).collect();
    (dr, df)
}

pub(crate) fn g_loss_logit_grads(fake: &[Array2<f64>]) -> Vec<Array2<f64>> {
    let n = count(fake);
    fake.iter().map(|m| m.mapv(|v| -sigmoid(-v) / n)).collect()
}

/// Stacks rows of two time-major batches.
pub(crate) fn stack_rows(a: &[Array2<f64>], b: &[Array2<f64>]) -> Vec<Array2<f64>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| concatenate(Axis(0), &[x.view(), y.view()]).expect("equal widths"))
        .collect()
}

/// Discriminator loss and its parameter gradient for one real batch and one
/// latent batch. The generator is evaluated but receives no gradient.
pub fn discriminator_loss_and_grad(
    model: &GanModel,
    real: &[Array2<f64>],
    z: &[Array2<f64>],
) -> Result<(AdversarialLosses, DiscriminatorParams)> {
    let steps = model.config.seq_len;
    let fake = generator_forward(&model.generator, z, steps)?.out;
    let b = real[0].nrows();
    let pass = discriminator_forward(&model.discriminator, &stack_rows(real, &fake), steps)?;
    let lr: Vec<Array2<f64>> = pass.logits.iter().map(|l| l.slice(s![..b, ..]).to_owned()).collect();
    let lf: Vec<Array2<f64>> = pass.logits.iter().map(|l| l.slice(s![b.., ..]).to_owned()).collect();
    let losses = adversarial_losses(&lr, &lf)?;
    let (dr, df) = d_loss_logit_grads(&lr, &lf);
    let (grads, _) = discriminator_backward(&model.discriminator, &pass, &stack_rows(&dr, &df))?;
    Ok((losses, grads))
}

/// Generator loss and its parameter gradient, backpropagated through a
/// frozen discriminator.
pub fn generator_loss_and_grad(model: &GanModel, z: &[Array2<f64>]) -> Result<(f64, GeneratorParams)> {
    let steps = model.config.seq_len;
    let gp = generator_forward(&model.generator, z, steps)?;
    let dp = discriminator_forward(&model.discriminator, &gp.out, steps)?;
    let g_loss = adversarial_losses(&dp.logits, &dp.logits)?.g_loss;
    let dl = g_loss_logit_grads(&dp.logits);
    let (_, d_values) = discriminator_backward(&model.discriminator, &dp, &dl)?;
    let grads = generator_backward(&model.generator, &gp, &d_values)?;
    Ok((g_loss, grads))
}

/// Raw generator outputs in (−1, 1), shaped (n, steps + 1).
pub fn generate_scaled(model: &GanModel, n: usize, steps: usize, seed: u64) -> Result<Array2<f64>> {
    if n == 0 || steps == 0 {
        return Err(validation("n and steps must be at least 1"));
    }
    let z = sample_latent(n, steps + 1, seed);
    let mut out = Array2::zeros((n, steps + 1));
    const CHUNK: usize = 512;
    for start in (0..n).step_by(CHUNK) {
        let end = (start + CHUNK).min(n);
        let zc: Vec<Array2<f64>> = (0..=steps).map(|t| z.slice(s![start..end, t, ..]).to_owned()).collect();
        let pass = generator_forward(&model.generator, &zc, model.config.seq_len)?;
        for (t, y) in pass.out.iter().enumerate() {
            out.slice_mut(s![start..end, t]).assign(&y.column(0));
        }
    }
    Ok(out)
}

/// Draws `n` synthetic paths of `steps` steps in price units. Requests longer
/// than the trained length are marked as extrapolated in the origin.
pub fn generate(model: &GanModel, n: usize, steps: usize, seed: u64) -> Result<PathSet> {
    let raw = generate_scaled(model, n, steps, seed)?;
    let paths = raw
        .outer_iter()
        .enumerate()
        .map(|(i, row)| {
            let values = model.scaler.inverse_values(row.as_slice().expect("row-major"));
            PricePath::new(values, seed, i as u64, "gan")
        })
        .collect::<synthbt_core::Result<Vec<_>>>()?;
    Ok(PathSet::new(
        paths,
        PathOrigin::Generator {
            checkpoint: None,
            seed,
            extrapolated: steps > model.config.seq_len,
        },
    )?)
}
