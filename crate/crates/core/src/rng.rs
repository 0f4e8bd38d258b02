//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by an
//! explicit `(seed, stream)` pair, so trials can run in any order (or in
//! parallel) and still reproduce bit for bit.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::Real;

pub type SeededRng = ChaCha8Rng;

/// Generator for stream 0 of `seed`.
pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for stream `index` of `seed`.
pub fn stream(seed: u64, index: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A `u64` seed for item `index` of a run keyed by `seed`, e.g. the
/// parameter draw of one trial.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    stream(seed, index).next_u64()
}

/// Uniform sample from `[-1, 1]`.
pub fn symmetric_unit<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::of(rng.gen_range(-1.0..=1.0))
}

pub fn symmetric_unit_vec<T: Real, R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<T> {
    (0..len).map(|_| symmetric_unit(rng)).collect()
}

pub fn standard_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::of(rng.sample::<f64, _>(StandardNormal))
}
