//! Multiclass holdout overfitting as sequence reconstruction.
//!
//! A hidden sequence `z ∈ [m]^n` (the test labels) can only be probed
//! through an accuracy oracle that returns how many positions of a
//! submitted query sequence agree with it. This crate implements query
//! strategies that turn `k` such answers into a prediction with accuracy
//! provably above the `1/m` baseline, the permutation reduction that makes
//! their average-case guarantees hold on every fixed `z`, variants that work
//! when only classifiers over opaque features can be submitted, exact
//! reference computations, and a reproducible Monte Carlo harness.
//!
//! ```
//! use hamming_overfit::{rng::stream, run_small, sample_uniform_labels, MatchOracle};
//!
//! let mut rng = stream(7);
//! let z = sample_uniform_labels(1000, 10, &mut rng).unwrap();
//! let mut oracle = MatchOracle::with_budget(z, 11);
//! let zhat = run_small(&mut oracle, 11).unwrap();
//! let acc = oracle.final_accuracy(&zhat).unwrap();
//! assert_eq!(oracle.queries_used(), 11);
//! assert!(acc.matches <= 1000);
//! ```

pub mod attack_large;
pub mod attack_small;
pub mod baseline;
pub mod bounds;
pub mod error;
pub mod featurespace;
pub mod harness;
pub mod oracle;
pub mod reduction;
pub mod rng;

pub use attack_large::{build_queries, choose_t, run_large, BalancedQueryMatrix, LargeAttack};
pub use attack_small::{partition_blocks, run_small, run_small_k1, SmallAttack};
pub use baseline::{ConstantGuess, UniformGuess};
pub use bounds::BoundReport;
pub use error::{Error, Result};
pub use oracle::{
    match_count, sample_uniform_labels, Attack, Label, LabelSequence, MatchOracle, MatchResult, QueryOracle,
    QuerySequence,
};
pub use reduction::{apply_bundle, sample_bundle, wrap_attack, PermutationBundle};
