//! Splittable, counter-based randomness.
//!
//! Every random quantity in a sweep is drawn from a stream whose seed is a
//! pure function of the master seed and a path of integer coordinates
//! (grid point, trial, purpose). Trials never share a generator, so results
//! are identical under any parallel schedule.
//!
//! Per-feature randomness in the unknown-features attacks uses the same idea
//! at a finer grain: a value attached to feature id `x` is derived from
//! `(run_seed, x)` alone, which makes lazily evaluated classifiers
//! independent of evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every derived stream.
pub type StreamRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The splitmix64 finalizer applied to `x + golden gamma`.
#[inline]
pub const fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `master` and a coordinate path.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Key for the value attached to feature `x` under `seed`.
#[inline]
pub fn feature_key(seed: u64, x: u64) -> u64 {
    splitmix64(seed ^ splitmix64(x))
}

pub fn stream(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

/// Exactly uniform integer in `0..bound` drawn from the splitmix sequence
/// started at `key` (Lemire's multiply-shift with rejection).
///
/// `bound` must be non-zero.
#[inline]
pub fn hashed_below(key: u64, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    let mut state = key;
    let mut wide = u128::from(splitmix64(state)) * u128::from(bound);
    if (wide as u64) < bound {
        // only low words below `bound` can fall under the rejection threshold
        let threshold = bound.wrapping_neg() % bound;
        while (wide as u64) < threshold {
            state = state.wrapping_add(GOLDEN_GAMMA);
            wide = u128::from(splitmix64(state)) * u128::from(bound);
        }
    }
    (wide >> 64) as u64
}
