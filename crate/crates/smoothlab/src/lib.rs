//! smoothlab: a library and CLI workbench for smooth-number statistics,
//! the Dickman distribution, and harmonic-sample approximations.
//!
//! The crate computes exact smooth-number quantities from a
//! largest-prime-factor sieve, solves the Dickman delay equation to
//! certified accuracy, samples the stochastic objects involved
//! (geometric multiplicity vectors, weighted geometric sums, harmonic
//! variables, Dickman variables), and runs grid scans that measure the
//! quality of the Dickman-type approximations with exact oracles wherever
//! an exact computation is feasible.

#![forbid(unsafe_code)]

pub mod dickman;
pub mod error;
pub mod kahan;
pub mod primes;
pub mod rng;
pub mod sample;
pub mod scan;
pub mod smooth;
pub mod stein;

pub use dickman::{CdfValue, DickmanTable};
pub use error::{Error, Result};
pub use primes::{harmonic, HarmonicPrefix, MertensRecord, PrimeTable};
pub use rng::RandomSource;
pub use smooth::{LpfSieve, SmoothQuery};

/// The Euler-Mascheroni constant, correct to f64 precision.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// exp(-gamma), the normalizing constant of the Dickman density.
pub fn exp_neg_gamma() -> f64 {
    (-EULER_GAMMA).exp()
}
