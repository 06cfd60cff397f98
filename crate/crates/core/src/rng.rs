//! Seeded random-number stream shared by every simulation component.
//!
//! All randomness flows through [`RngStream`], a thin wrapper over ChaCha8.
//! ChaCha output is specified bit-for-bit, so a seed reproduces the same draw
//! sequence on every platform. Each simulation run owns exactly one stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform real in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform integer in `[0, n)`. `n` must be non-zero.
    pub fn below(&mut self, n: u64) -> u64 {
        self.inner.random_range(0..n)
    }

    /// Normal draw with the given mean and standard deviation.
    ///
    /// A zero deviation returns `mean` without consuming any randomness.
    pub fn normal(&mut self, mean: f64, std_dev: f64) -> f64 {
        if std_dev == 0.0 {
            return mean;
        }
        Normal::new(mean, std_dev)
            .expect("standard deviation must be finite and non-negative")
            .sample(&mut self.inner)
    }

    /// Raw 64-bit output, used by tests that compare streams byte for byte.
    pub fn next_u64(&mut self) -> u64 {
        self.inner.random::<u64>()
    }
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a base seed and two indices.
///
/// `derive_seed(base, a, b) = splitmix64(splitmix64(base ^ splitmix64(a)) ^ b)`.
/// The sweep uses `(point_id, rep)` and the forest uses `(tree, 0)`, so any
/// single run or tree can be re-created without replaying the others.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(base ^ splitmix64(a)) ^ b)
}
