//! Dense and LSTM layers with exact reverse-mode gradients, an Adam
//! optimizer and a finite-difference gradient checker.

pub mod activation;
pub mod bilstm;
pub mod count;
pub mod dense;
pub mod error;
pub mod gradcheck;
pub mod init;
pub mod lstm;
pub mod optim;
pub mod tensor;

pub use bilstm::{bilstm_backward, bilstm_forward, BiLstmGradients, BiLstmOutput, BiLstmRecord};
pub use count::{count_params, Architecture, DISCRIMINATOR_INPUT, GENERATOR_INPUT};
pub use dense::DenseParams;
pub use error::{NeuralError, Result};
pub use gradcheck::grad_check;
pub use lstm::{lstm_backward, lstm_forward, LstmGradients, LstmOutput, LstmParams, LstmRecord, LstmState};
pub use optim::{clip_global_norm, optim_step, AdamConfig, OptimState, DEFAULT_CLIP_NORM};
pub use tensor::{prefixed, Parameters, TensorBuffer};
