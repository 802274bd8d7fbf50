//! Seeded random streams.
//!
//! Every random draw in the workspace comes from [`ChaCha8Rng`]. A master
//! seed is expanded with `seed_from_u64`, and independent substreams are
//! selected with ChaCha's 64-bit stream counter: substream `k` of seed `s`
//! is `ChaCha8Rng::seed_from_u64(s)` with `set_stream(k)`. Paths, latent
//! sequences and minibatches each use their own substream, so the output of
//! one path never depends on how many other paths are drawn or on the
//! order in which worker threads run.
//!
//! Standard normal variates use `rand_distr::StandardNormal` (ziggurat).
//! Results are reproducible within one build; bit equality across
//! different implementations is not promised.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type StreamRng = ChaCha8Rng;

/// Substream `stream` of the master `seed`.
pub fn substream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed from a master seed and a label, for experiments that
/// need several unrelated seeded stages (splitmix64 finalizer).
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}
