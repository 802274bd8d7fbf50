//! Recurrent GAN over price paths: a one-directional LSTM generator fed with
//! per-timestep Gaussian noise and a bidirectional LSTM discriminator, both
//! given the normalized time index as an extra input.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod model;
pub mod scaler;
pub mod train;

pub use checkpoint::{load_checkpoint, read_manifest, save_checkpoint, Manifest};
pub use config::{GanConfig, LATENT_DIM};
pub use error::{Result, RganError};
pub use model::{
    adversarial_losses, discriminator_loss_and_grad, generate, generate_scaled, generator_loss_and_grad, latent_steps,
    sample_latent, AdversarialLosses, DiscriminatorParams, GanModel, GeneratorParams,
};
pub use scaler::Scaler;
pub use train::{gbm_moment_hook, train, train_with, EvalHook, EvalMetrics, TrainLog, TrainRecord, Trainer};
