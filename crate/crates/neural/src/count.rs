use serde::{Deserialize, Serialize};

use crate::dense::DenseParams;
use crate::lstm::LstmParams;

/// Generator input: 5 latent dimensions plus normalized time.
pub const GENERATOR_INPUT: usize = 6;
/// Discriminator input: one value plus normalized time.
pub const DISCRIMINATOR_INPUT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Generator,
    Discriminator,
}

/// Trainable parameter count of each network for hidden size `h`.
pub fn count_params(arch: Architecture, h: usize) -> usize {
    match arch {
        // LSTM(6 → h) + dense h → 1 with bias
        Architecture::Generator => LstmParams::count(GENERATOR_INPUT, h) + DenseParams::count(h, 1, true),
        // two LSTM(2 → h) + bias-free head 2h → 2
        Architecture::Discriminator => {
            2 * LstmParams::count(DISCRIMINATOR_INPUT, h) + DenseParams::count(2 * h, 2, false)
        }
    }
}
