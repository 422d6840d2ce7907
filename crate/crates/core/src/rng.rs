//! Seed splitting.
//!
//! Every stochastic routine draws from a ChaCha8 stream whose 64-bit seed is
//! derived from a root seed and a path of indices, e.g. `(seed, cell, trial)`.
//! The derivation folds each path element into the state with SplitMix64:
//!
//! ```text
//! h0 = splitmix64(seed)
//! h_{i+1} = splitmix64(h_i ^ splitmix64(path[i] + 0x9E3779B97F4A7C15))
//! ```
//!
//! so a trial's randomness depends only on its coordinates, never on which
//! thread ran it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::norms::{MixedArray, MixedShape};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a root seed and a path of indices.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(seed), |h, &p| {
        splitmix64(h ^ splitmix64(p.wrapping_add(GOLDEN)))
    })
}

/// A reproducible generator for the given seed path.
pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}

pub fn gaussian_vec<R: rand::Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// A `b x d` array of independent standard Gaussian entries.
pub fn gaussian_array<R: rand::Rng + ?Sized>(rng: &mut R, shape: MixedShape) -> MixedArray {
    MixedArray::from_vec(shape, gaussian_vec(rng, shape.len())).expect("gaussian draws are finite")
}
