//! Seedable, splittable deterministic random streams.
//!
//! Every stochastic routine in this crate draws from a [`RandomSource`],
//! identified by a `(seed, stream)` pair. Identical pairs produce identical
//! output sequences regardless of scheduling; distinct stream ids give
//! independent-quality streams from the same seed, which is how sampling
//! jobs are partitioned across workers.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One deterministic random stream, backed by ChaCha8.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    /// Stream 0 of the given seed.
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RandomSource { seed, stream, rng }
    }

    /// A fresh source on the same seed but a different stream id.
    pub fn split(&self, stream: u64) -> Self {
        Self::with_stream(self.seed, stream)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform variate on the open interval (0, 1).
    ///
    /// Values are of the form k*2^-53 + 2^-54, so neither endpoint can
    /// occur and `ln(u)` is always finite.
    pub fn uniform_open01(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        (self.rng.next_u64() >> 11) as f64 * SCALE + 0.5 * SCALE
    }

    /// Uniform integer in `[0, bound)` by rejection from the top range.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let x = self.rng.next_u64();
            if x < zone {
                return x % bound;
            }
        }
    }
}
