//! Seeded random test frames.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fft2d::Frame2d;

/// Per-component amplitude of generated samples: real and imaginary parts
/// are uniform in `[-AMPLITUDE, AMPLITUDE)`.
pub const AMPLITUDE: f64 = 0.5;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            Complex64::new(
                rng.gen_range(-AMPLITUDE..AMPLITUDE),
                rng.gen_range(-AMPLITUDE..AMPLITUDE),
            )
        })
        .collect()
}

pub fn random_frame<R: Rng>(rng: &mut R, n: usize) -> Result<Frame2d> {
    Frame2d::new(n, random_vector(rng, n * n))
}
