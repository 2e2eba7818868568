use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::oracle::{check_params, Attack, Label, LabelSequence, MatchOracle};
use crate::rng::stream;

/// Largest `m^n` the exhaustive oracle will enumerate.
pub const EXHAUSTIVE_LIMIT: u64 = 1_000_000;

/// Exact mean accuracy of `attack` over all `m^n` equally likely hidden
/// sequences, i.e. its accuracy under uniform labels.
///
/// Each sequence is attacked once per entry of `seeds`, with a fresh
/// `k`-query budget and an RNG stream seeded from that entry. For a
/// deterministic attack a single seed gives the exact value; for a
/// randomized one the result is exact only for the declared seed set.
pub fn exhaustive_tiny_oracle<A: Attack + ?Sized>(
    n: usize,
    m: usize,
    k: usize,
    attack: &A,
    seeds: &[u64],
) -> Result<BigRational> {
    check_params(n, m)?;
    if seeds.is_empty() {
        return Err(Error::param("at least one seed is required"));
    }
    let states = (m as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if states > u128::from(EXHAUSTIVE_LIMIT) {
        return Err(Error::StateSpace {
            states,
            limit: EXHAUSTIVE_LIMIT,
        });
    }

    let mut labels = vec![1 as Label; n];
    let mut correct: u64 = 0;
    for _ in 0..states {
        let hidden = LabelSequence::new(labels.clone(), m)?;
        for &seed in seeds {
            let mut oracle = MatchOracle::with_budget(hidden.clone(), k);
            let zhat = attack.run(&mut oracle, k, &mut stream(seed))?;
            correct += oracle.final_accuracy(&zhat)?.matches as u64;
        }
        // odometer over [m]^n
        for slot in labels.iter_mut() {
            if usize::from(*slot) < m {
                *slot += 1;
                break;
            }
            *slot = 1;
        }
    }
    let denom = BigInt::from(n) * BigInt::from(states) * BigInt::from(seeds.len());
    Ok(BigRational::new(BigInt::from(correct), denom))
}
