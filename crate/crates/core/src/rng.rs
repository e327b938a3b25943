//! Seeded RNG helpers.
//!
//! All randomness in the crate flows through a `ChaCha8Rng` created from an
//! explicit `u64` seed, so every result is reproducible bit-for-bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::Matrix;

/// Deterministic generator from a seed.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from `[lo, hi)`.
pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// Matrix with entries drawn uniformly from `[-scale, scale)`, row-major fill.
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| uniform(rng, -scale, scale)).collect();
    Matrix::new(rows, cols, data).expect("uniform draws are finite")
}

/// In-place Fisher–Yates shuffle driven by the given generator.
pub fn shuffle<T>(rng: &mut ChaCha8Rng, items: &mut [T]) {
    if items.len() < 2 {
        return;
    }
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}
