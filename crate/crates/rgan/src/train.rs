use std::io::Write;

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use synthbt_core::evaluation::moment_r2;
use synthbt_core::rng::{derive_seed, standard_normal, substream, StreamRng};
use synthbt_core::{PathSet, ProcessSpec};
use synthbt_neural::{clip_global_norm, optim_step, AdamConfig, NeuralError, OptimState, Parameters};

use crate::config::{GanConfig, LATENT_DIM};
use crate::error::{validation, Result, RganError};
use crate::model::{discriminator_loss_and_grad, generate, generator_loss_and_grad, GanModel};
use crate::scaler::Scaler;

const BATCH_LABEL: u64 = 2;
const LATENT_LABEL: u64 = 3;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvalMetrics {
    pub r2_mean: Option<f64>,
    pub r2_var: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub batches: usize,
    /// Mean losses over the batches since the previous record.
    pub d_loss: f64,
    pub g_loss: f64,
    pub r2_mean: Option<f64>,
    pub r2_var: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<TrainRecord>,
}

impl TrainLog {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TrainRecord> {
        self.records.last()
    }

    /// Best `(batches, r2_mean, r2_var)` by the smaller of the two R² values.
    pub fn best(&self) -> Option<(usize, f64, f64)> {
        self.records
            .iter()
            .filter_map(|r| Some((r.batches, r.r2_mean?, r.r2_var?)))
            .max_by(|a, b| a.1.min(a.2).total_cmp(&b.1.min(b.2)))
    }

    /// CSV with header `batches,d_loss,g_loss,r2_mean,r2_var`; missing R² is NaN.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "batches,d_loss,g_loss,r2_mean,r2_var")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{:?},{:?},{:?},{:?}",
                r.batches,
                r.d_loss,
                r.g_loss,
                r.r2_mean.unwrap_or(f64::NAN),
                r.r2_var.unwrap_or(f64::NAN)
            )?;
        }
        Ok(())
    }
}

/// Evaluation callback run every `eval_every` batches.
pub type EvalHook<'a> = dyn FnMut(&GanModel) -> EvalMetrics + 'a;

/// Hook that draws `n_paths` synthetic paths at the trained length and scores
/// their log moments against the GBM `spec`. Paths with non-positive prices
/// score as missing.
pub fn gbm_moment_hook(spec: ProcessSpec, n_paths: usize, seed: u64) -> impl FnMut(&GanModel) -> EvalMetrics {
    move |model: &GanModel| {
        let fit = generate(model, n_paths, model.config.seq_len, seed).and_then(|set| Ok(moment_r2(&set, &spec)?));
        match fit {
            Ok(f) => EvalMetrics {
                r2_mean: f.r2_mean,
                r2_var: f.r2_var,
            },
            Err(_) => EvalMetrics::default(),
        }
    }
}

/// Single-threaded optimizer loop holding exclusive access to the model.
pub struct Trainer {
    model: GanModel,
    d_opt: OptimState,
    g_opt: OptimState,
    data: Vec<Vec<f64>>,
    order: Vec<usize>,
    cursor: usize,
    batch_rng: StreamRng,
    latent_rng: StreamRng,
    batches: usize,
}

impl Trainer {
    /// Fits the scaler on `data` and initializes both networks.
    pub fn new(config: GanConfig, data: &PathSet) -> Result<Self> {
        config.validate()?;
        if data.steps() != config.seq_len {
            return Err(validation(format!(
                "training paths have {} steps, config expects {}",
                data.steps(),
                config.seq_len
            )));
        }
        if data.len() < config.batch_size {
            return Err(validation(format!(
                "{} paths cannot fill a batch of {}",
                data.len(),
                config.batch_size
            )));
        }
        let scaler = Scaler::fit(data, config.scaling)?;
        let model = GanModel::new(config, scaler)?;
        Ok(Self::resume(model, data))
    }

    /// Continues training an existing model; its stored scaler is kept.
    pub fn resume(model: GanModel, data: &PathSet) -> Self {
        let adam = AdamConfig {
            learning_rate: model.config.learning_rate,
            beta1: model.config.beta1,
            beta2: model.config.beta2,
            ..AdamConfig::default()
        };
        let seed = model.config.seed;
        let scaled = data.paths().iter().map(|p| model.scaler.transform_path(p)).collect();
        Trainer {
            d_opt: OptimState::for_params(&model.discriminator, adam),
            g_opt: OptimState::for_params(
                &model.generator,
                AdamConfig {
                    learning_rate: model.config.g_learning_rate.unwrap_or(adam.learning_rate),
                    ..adam
                },
            ),
            data: scaled,
            order: (0..data.len()).collect(),
            cursor: usize::MAX,
            batch_rng: substream(derive_seed(seed, BATCH_LABEL), 0),
            latent_rng: substream(derive_seed(seed, LATENT_LABEL), 0),
            batches: 0,
            model,
        }
    }

    pub fn model(&self) -> &GanModel {
        &self.model
    }

    pub fn into_model(self) -> GanModel {
        self.model
    }

    pub fn batches(&self) -> usize {
        self.batches
    }

    /// Next real minibatch, time-major; the data is reshuffled every epoch.
    fn real_batch(&mut self) -> Vec<Array2<f64>> {
        let b = self.model.config.batch_size;
        if self.cursor.saturating_add(b) > self.order.len() {
            self.order.shuffle(&mut self.batch_rng);
            self.cursor = 0;
        }
        let idx = &self.order[self.cursor..self.cursor + b];
        self.cursor += b;
        let len = self.data[0].len();
        (0..len)
            .map(|t| Array2::from_shape_fn((b, 1), |(i, _)| self.data[idx[i]][t]))
            .collect()
    }

    fn latent_batch(&mut self) -> Vec<Array2<f64>> {
        let b = self.model.config.batch_size;
        let len = self.model.config.seq_len + 1;
        let rng = &mut self.latent_rng;
        (0..len)
            .map(|_| Array2::from_shape_simple_fn((b, LATENT_DIM), || standard_normal(rng)))
            .collect()
    }

    /// One discriminator update on a fresh real batch and latent batch.
    /// Returns the discriminator loss before the update.
    pub fn d_step(&mut self) -> Result<f64> {
        let real = self.real_batch();
        let z = self.latent_batch();
        let (losses, mut grads) = discriminator_loss_and_grad(&self.model, &real, &z)?;
        if !losses.d_loss.is_finite() {
            return Err(NeuralError::NonFinite("discriminator loss".into()).into());
        }
        clip_global_norm(&mut grads, self.model.config.clip_norm);
        optim_step(&mut self.model.discriminator, &grads, &mut self.d_opt)?;
        Ok(losses.d_loss)
    }

    /// One generator update on a fresh latent batch. Returns the generator
    /// loss before the update.
    pub fn g_step(&mut self) -> Result<f64> {
        let z = self.latent_batch();
        let (g_loss, mut grads) = generator_loss_and_grad(&self.model, &z)?;
        if !g_loss.is_finite() {
            return Err(NeuralError::NonFinite("generator loss".into()).into());
        }
        clip_global_norm(&mut grads, self.model.config.clip_norm);
        optim_step(&mut self.model.generator, &grads, &mut self.g_opt)?;
        Ok(g_loss)
    }

    /// `d_steps` discriminator updates followed by one generator update.
    /// Returns the mean discriminator loss and the generator loss.
    pub fn train_batch(&mut self) -> Result<(f64, f64)> {
        let mut d = 0.0;
        for _ in 0..self.model.config.d_steps {
            d += self.d_step()?;
        }
        d /= self.model.config.d_steps as f64;
        let g = self.g_step()?;
        self.batches += 1;
        self.model.steps_trained += 1;
        if !(self.model.discriminator.all_finite() && self.model.generator.all_finite()) {
            return Err(NeuralError::NonFinite("parameters".into()).into());
        }
        Ok((d, g))
    }
}

fn reached(m: &EvalMetrics, target: f64) -> bool {
    matches!((m.r2_mean, m.r2_var), (Some(a), Some(b)) if a >= target && b >= target)
}

/// Trains a fresh model on `data`. Every `eval_every` batches the hook's
/// metrics and the mean losses since the last evaluation are logged; training
/// ends at `max_batches` or once both R² values reach `early_stop`.
pub fn train(config: GanConfig, data: &PathSet, hook: Option<&mut EvalHook<'_>>) -> Result<(GanModel, TrainLog)> {
    let trainer = Trainer::new(config, data)?;
    train_with(trainer, hook)
}

pub fn train_with(mut trainer: Trainer, mut hook: Option<&mut EvalHook<'_>>) -> Result<(GanModel, TrainLog)> {
    let cfg = trainer.model().config.clone();
    let mut log = TrainLog::default();
    let (mut d_sum, mut g_sum, mut since) = (0.0, 0.0, 0usize);
    while trainer.batches() < cfg.max_batches {
        let (d, g) = match trainer.train_batch() {
            Ok(v) => v,
            Err(e @ (RganError::Neural(_) | RganError::Validation(_))) => {
                return Err(RganError::Diverged {
                    batches: trainer.batches(),
                    reason: e.to_string(),
                    log,
                })
            }
            Err(e) => return Err(e),
        };
        d_sum += d;
        g_sum += g;
        since += 1;
        let n = trainer.batches();
        if n.is_multiple_of(cfg.eval_every) || n == cfg.max_batches {
            let metrics = hook.as_mut().map(|h| h(trainer.model())).unwrap_or_default();
            log.records.push(TrainRecord {
                batches: n,
                d_loss: d_sum / since as f64,
                g_loss: g_sum / since as f64,
                r2_mean: metrics.r2_mean,
                r2_var: metrics.r2_var,
            });
            (d_sum, g_sum, since) = (0.0, 0.0, 0);
            if cfg.early_stop.is_some_and(|t| reached(&metrics, t)) {
                break;
            }
        }
    }
    Ok((trainer.into_model(), log))
}
