use ndarray::Array2;
use rand::Rng;

/// Fills `w` with draws from `U(−a, a)`, `a = √(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng + ?Sized>(w: &mut Array2<f64>, fan_in: usize, fan_out: usize, rng: &mut R) {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    w.mapv_inplace(|_| rng.random_range(-a..a));
}
