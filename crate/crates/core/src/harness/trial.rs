//! One trial: hidden labels, oracle, attack, grade.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::RngCore;

use super::{AttackId, GridPoint, Labeling};
use crate::attack_large::LargeAttack;
use crate::attack_small::SmallAttack;
use crate::baseline::UniformGuess;
use crate::error::{Error, Result};
use crate::featurespace::{
    wrap_attack_features, ClassifierOracle, FeatureAttack, FeatureId, FeaturePermuted, FeatureUniverse, HiddenLabeling,
    LargeUnknown, SmallUnknown,
};
use crate::oracle::{sample_uniform_labels, Attack, LabelSequence, MatchOracle};
use crate::reduction::{wrap_attack, PermutationBundle, Permuted};
use crate::rng::{derive_seed, stream};

const HIDDEN: u64 = 0;
const COINS: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Wrap {
    None,
    Random,
    /// Wrapped with identity permutations (test hook).
    Identity,
}

#[derive(Clone, Debug)]
pub(crate) struct TrialSetup<'a> {
    pub attack: AttackId,
    pub point: GridPoint,
    pub labeling: &'a Labeling,
    pub wrap: Wrap,
    pub universe_size: Option<u64>,
    pub force_t: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Outcome {
    pub matches: usize,
    pub queries: usize,
    pub t: Option<usize>,
}

impl TrialSetup<'_> {
    /// Nominal prefix length for the large attacks.
    pub fn prefix_len(&self) -> Result<Option<usize>> {
        let GridPoint { n, m, k } = self.point;
        match self.attack {
            AttackId::Large | AttackId::LargeUnknown => {
                Ok(Some(LargeAttack { force_t: self.force_t }.prefix_len(n, m, k)?))
            }
            _ => Ok(None),
        }
    }

    /// Runs the trial seeded by `seed`. Hidden labels and attack coins come
    /// from separate derived streams.
    pub fn run(&self, seed: u64) -> Result<Outcome> {
        let mut hidden = stream(derive_seed(seed, &[HIDDEN]));
        let mut coins = stream(derive_seed(seed, &[COINS]));
        let t = self.prefix_len()?;
        let (matches, queries) = if self.attack.uses_features() {
            self.run_features(&mut hidden, &mut coins)?
        } else {
            self.run_sequence(&mut hidden, &mut coins)?
        };
        Ok(Outcome { matches, queries, t })
    }

    fn run_sequence(&self, hidden: &mut dyn RngCore, coins: &mut dyn RngCore) -> Result<(usize, usize)> {
        let GridPoint { n, m, k } = self.point;
        let z = match self.labeling {
            Labeling::Uniform => sample_uniform_labels(n, m, hidden)?,
            Labeling::Constant(l) => LabelSequence::constant(n, m, *l)?,
            Labeling::Sequence { labels, .. } => LabelSequence::new(labels.clone(), m)?,
        };
        let inner: Box<dyn Attack> = match self.attack {
            AttackId::Small => Box::new(SmallAttack),
            AttackId::Large => Box::new(LargeAttack { force_t: self.force_t }),
            AttackId::RandomBaseline => Box::new(UniformGuess),
            other => unreachable!("{other} is a feature attack"),
        };
        let attack: Box<dyn Attack> = match self.wrap {
            Wrap::None => inner,
            Wrap::Random => Box::new(wrap_attack(inner)),
            Wrap::Identity => Box::new(Permuted::with_fixed_bundle(inner, PermutationBundle::identity(n, m)?)),
        };
        let mut oracle = MatchOracle::with_budget(z, k);
        let zhat = attack.run(&mut oracle, k, coins)?;
        Ok((oracle.final_accuracy(&zhat)?.matches, oracle.queries_used()))
    }

    fn run_features(&self, hidden: &mut dyn RngCore, coins: &mut dyn RngCore) -> Result<(usize, usize)> {
        let GridPoint { n, m, k } = self.point;
        let size = self.universe_size.unwrap_or(4 * n as u64);
        let size_usize = usize::try_from(size).map_err(|_| Error::param("universe size exceeds the address space"))?;
        let ids: Vec<FeatureId> = rand::seq::index::sample(hidden, size_usize, n)
            .into_iter()
            .map(|i| i as FeatureId)
            .collect();
        let labeling = match self.labeling {
            Labeling::Uniform => HiddenLabeling::Uniform {
                seed: hidden.next_u64(),
            },
            Labeling::Constant(l) => HiddenLabeling::Constant(*l),
            Labeling::Sequence { labels, .. } => HiddenLabeling::Assigned {
                labels: ids.iter().copied().zip(labels.iter().copied()).collect(),
                default: 1,
            },
        };
        let universe = FeatureUniverse::new(size, m, ids, labeling)?;
        let inner: Box<dyn FeatureAttack> = match self.attack {
            AttackId::SmallUnknown => Box::new(SmallUnknown::default()),
            AttackId::LargeUnknown => Box::new(LargeUnknown {
                force_t: self.force_t,
                forced: None,
            }),
            other => unreachable!("{other} is a sequence attack"),
        };
        let attack: Box<dyn FeatureAttack> = match self.wrap {
            Wrap::None => inner,
            Wrap::Random => Box::new(wrap_attack_features(inner)),
            Wrap::Identity => Box::new(FeaturePermuted::with_identity(inner)),
        };
        let mut oracle = ClassifierOracle::with_budget(universe, k);
        let f = attack.run(&mut oracle, k, coins)?;
        Ok((oracle.final_accuracy(&*f)?.matches, oracle.queries_used()))
    }
}

/// Runs `f` and turns both errors and panics into [`Error::Trial`]
/// carrying the derived seed.
pub(crate) fn guarded<T>(trial: usize, seed: u64, f: impl FnOnce() -> Result<T>) -> Result<T> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => Ok(v),
        Ok(Err(e)) => Err(Error::Trial {
            trial,
            seed,
            message: e.to_string(),
        }),
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            Err(Error::Trial { trial, seed, message })
        }
    }
}

/// `f(0), …, f(count - 1)` in index order, in parallel when available.
#[cfg(feature = "parallel")]
pub(crate) fn map_trials<T: Send>(count: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_trials<T: Send>(count: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..count).map(f).collect()
}
