//! The unknown-test-features setting.
//!
//! Features are opaque ids. The test set is a hidden subset of `n` distinct
//! ids with a hidden labeling; queries are total classifiers over ids and
//! the oracle only reports their accuracy on the hidden subset. Attacks in
//! this module never learn which ids are in the test set or in what order
//! they are evaluated.
//!
//! Classifiers are lazy: they are only evaluated at the ids the oracle asks
//! about. Any per-id randomness is derived from `(run seed, id)`, so the
//! value at an id does not depend on evaluation order.

mod attacks;
mod wrap;

use std::cell::RefCell;
use std::collections::{HashMap, HashSet};

use rand::Rng;

pub use attacks::{prefix_hits, BlockHash, ForcedPrefix, LargeUnknown, SmallUnknown};
pub use wrap::{wrap_attack_features, FeaturePermCache, FeaturePermuted, PermutingClassifierOracle};

use crate::error::{Error, Result};
use crate::oracle::{check_params, count_equal, Label, LabelSequence, MatchResult};
use crate::rng::{feature_key, hashed_below};

pub type FeatureId = u64;

/// Per-run memo of a per-id value over the last batch of ids evaluated.
/// The oracle evaluates every query on the same ids, so after the first
/// query the values are reused instead of recomputed.
pub(crate) struct BatchMemo<T> {
    cell: RefCell<Option<(Vec<FeatureId>, Vec<T>)>>,
}

impl<T> BatchMemo<T> {
    pub(crate) fn new() -> Self {
        BatchMemo {
            cell: RefCell::new(None),
        }
    }

    pub(crate) fn with<R>(
        &self,
        xs: &[FeatureId],
        compute: impl Fn(FeatureId) -> T,
        read: impl FnOnce(&[T]) -> R,
    ) -> R {
        let mut cell = self.cell.borrow_mut();
        let fresh = !matches!(&*cell, Some((ids, _)) if ids.as_slice() == xs);
        if fresh {
            *cell = Some((xs.to_vec(), xs.iter().map(|&x| compute(x)).collect()));
        }
        let (_, values) = cell.as_ref().expect("memo filled above");
        read(values)
    }
}

impl<T> std::fmt::Debug for BatchMemo<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BatchMemo").finish_non_exhaustive()
    }
}

/// A map from feature ids to labels in `[m]`.
pub trait Classifier {
    fn label(&self, x: FeatureId) -> Label;

    /// `out[i] = self.label(xs[i])`.
    fn label_all(&self, xs: &[FeatureId], out: &mut Vec<Label>) {
        out.clear();
        out.extend(xs.iter().map(|&x| self.label(x)));
    }
}

impl<C: Classifier + ?Sized> Classifier for Box<C> {
    fn label(&self, x: FeatureId) -> Label {
        (**self).label(x)
    }

    fn label_all(&self, xs: &[FeatureId], out: &mut Vec<Label>) {
        (**self).label_all(xs, out)
    }
}

impl<C: Classifier + ?Sized> Classifier for &C {
    fn label(&self, x: FeatureId) -> Label {
        (**self).label(x)
    }

    fn label_all(&self, xs: &[FeatureId], out: &mut Vec<Label>) {
        (**self).label_all(xs, out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConstantClassifier(pub Label);

impl Classifier for ConstantClassifier {
    fn label(&self, _x: FeatureId) -> Label {
        self.0
    }
}

/// Explicit labels for some ids, a default everywhere else.
#[derive(Clone, Debug, Default)]
pub struct TableClassifier {
    pub table: HashMap<FeatureId, Label>,
    pub default: Label,
}

impl Classifier for TableClassifier {
    fn label(&self, x: FeatureId) -> Label {
        self.table.get(&x).copied().unwrap_or(self.default)
    }
}

/// The true labeling `f`.
#[derive(Clone, Debug)]
pub enum HiddenLabeling {
    /// `f(x)` independent and uniform on `[m]` for every id.
    Uniform {
        seed: u64,
    },
    Constant(Label),
    /// Listed ids get the listed labels; everything else `default`.
    Assigned {
        labels: HashMap<FeatureId, Label>,
        default: Label,
    },
}

impl HiddenLabeling {
    fn label(&self, x: FeatureId, m: usize) -> Label {
        match self {
            HiddenLabeling::Uniform { seed } => hashed_below(feature_key(*seed, x), m as u64) as Label + 1,
            HiddenLabeling::Constant(l) => *l,
            HiddenLabeling::Assigned { labels, default } => labels.get(&x).copied().unwrap_or(*default),
        }
    }
}

/// A finite feature universe `0..size` with a hidden test subset.
#[derive(Clone, Debug)]
pub struct FeatureUniverse {
    size: u64,
    m: usize,
    test_ids: Vec<FeatureId>,
    labeling: HiddenLabeling,
    /// `f` evaluated on the test ids, in order.
    test_labels: Vec<Label>,
}

impl FeatureUniverse {
    pub fn new(size: u64, m: usize, test_ids: Vec<FeatureId>, labeling: HiddenLabeling) -> Result<Self> {
        check_params(test_ids.len(), m)?;
        let mut seen = HashSet::with_capacity(test_ids.len());
        for &x in &test_ids {
            if x >= size {
                return Err(Error::param(format!("test feature {x} outside universe 0..{size}")));
            }
            if !seen.insert(x) {
                return Err(Error::param(format!("test feature {x} appears twice")));
            }
        }
        let test_labels: Vec<Label> = test_ids.iter().map(|&x| labeling.label(x, m)).collect();
        if test_labels.iter().any(|&l| l == 0 || usize::from(l) > m) {
            return Err(Error::param(format!("hidden labeling leaves 1..={m}")));
        }
        Ok(FeatureUniverse {
            size,
            m,
            test_ids,
            labeling,
            test_labels,
        })
    }

    /// `n` distinct test ids drawn uniformly from `0..size`, in random order.
    pub fn sample<R: Rng + ?Sized>(
        n: usize,
        size: u64,
        m: usize,
        labeling: HiddenLabeling,
        rng: &mut R,
    ) -> Result<Self> {
        check_params(n, m)?;
        if size < n as u64 {
            return Err(Error::param(format!("universe size {size} is smaller than n = {n}")));
        }
        let size_usize = usize::try_from(size).map_err(|_| Error::param("universe size exceeds the address space"))?;
        let ids = rand::seq::index::sample(rng, size_usize, n)
            .into_iter()
            .map(|i| i as FeatureId)
            .collect();
        FeatureUniverse::new(size, m, ids, labeling)
    }

    /// Test ids `0..n` in order with `f(j) = z_{j+1}`: the sequence model
    /// embedded in the feature model.
    pub fn sequential(z: &LabelSequence) -> Self {
        let labels: HashMap<FeatureId, Label> = z
            .labels()
            .iter()
            .enumerate()
            .map(|(j, &l)| (j as FeatureId, l))
            .collect();
        FeatureUniverse::new(
            z.len() as u64,
            z.classes(),
            (0..z.len() as FeatureId).collect(),
            HiddenLabeling::Assigned { labels, default: 1 },
        )
        .expect("a valid sequence gives a valid universe")
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn classes(&self) -> usize {
        self.m
    }

    pub fn test_size(&self) -> usize {
        self.test_ids.len()
    }

    pub fn test_ids(&self) -> &[FeatureId] {
        &self.test_ids
    }

    /// The hidden `f` at any id.
    pub fn true_label(&self, x: FeatureId) -> Label {
        self.labeling.label(x, self.m)
    }

    /// `f` on the test ids, in evaluation order.
    pub fn test_labels(&self) -> LabelSequence {
        LabelSequence::from_valid(self.test_labels.clone(), self.m)
    }

    /// `f` evaluated on the test ids, in evaluation order.
    pub fn evaluate(&self, f: &dyn Classifier) -> Result<LabelSequence> {
        let mut guesses = Vec::with_capacity(self.test_ids.len());
        f.label_all(&self.test_ids, &mut guesses);
        LabelSequence::new(guesses, self.m)
    }

    /// Accuracy of `f` on the test subset; no accounting.
    pub fn accuracy_of(&self, f: &dyn Classifier) -> Result<MatchResult> {
        Ok(self.score(&self.evaluate(f)?))
    }

    fn score(&self, guesses: &LabelSequence) -> MatchResult {
        MatchResult {
            matches: count_equal(guesses.labels(), &self.test_labels),
            n: self.test_ids.len(),
        }
    }
}

/// Classifier-level accuracy oracle access.
pub trait ClassifierQuery {
    /// Test set size `n`. Attacks may use it; it is also the denominator of
    /// every answer.
    fn test_size(&self) -> usize;

    fn classes(&self) -> usize;

    fn query(&mut self, f: &dyn Classifier) -> Result<MatchResult>;
}

/// Exact accuracy oracle over a feature universe, with query accounting.
#[derive(Clone, Debug)]
pub struct ClassifierOracle {
    universe: FeatureUniverse,
    queries_used: usize,
    budget: Option<usize>,
    transcript: Option<Vec<(LabelSequence, MatchResult)>>,
}

impl ClassifierOracle {
    pub fn new(universe: FeatureUniverse) -> Self {
        ClassifierOracle {
            universe,
            queries_used: 0,
            budget: None,
            transcript: None,
        }
    }

    pub fn with_budget(universe: FeatureUniverse, budget: usize) -> Self {
        ClassifierOracle {
            universe,
            queries_used: 0,
            budget: Some(budget),
            transcript: None,
        }
    }

    /// Keep every query, as seen on the test ids, with its answer.
    pub fn recording(mut self) -> Self {
        self.transcript = Some(Vec::new());
        self
    }

    /// Recorded queries; empty unless built with [`recording`](Self::recording).
    pub fn transcript(&self) -> &[(LabelSequence, MatchResult)] {
        self.transcript.as_deref().unwrap_or(&[])
    }

    pub fn queries_used(&self) -> usize {
        self.queries_used
    }

    pub fn universe(&self) -> &FeatureUniverse {
        &self.universe
    }

    /// Grades a final classifier without spending budget.
    pub fn final_accuracy(&self, f: &dyn Classifier) -> Result<MatchResult> {
        self.universe.accuracy_of(f)
    }
}

/// One accuracy query on a classifier.
pub fn classifier_oracle_query(oracle: &mut ClassifierOracle, f: &dyn Classifier) -> Result<MatchResult> {
    oracle.query(f)
}

impl ClassifierQuery for ClassifierOracle {
    fn test_size(&self) -> usize {
        self.universe.test_size()
    }

    fn classes(&self) -> usize {
        self.universe.m
    }

    fn query(&mut self, f: &dyn Classifier) -> Result<MatchResult> {
        if let Some(budget) = self.budget {
            if self.queries_used >= budget {
                return Err(Error::Budget {
                    used: self.queries_used,
                    budget,
                });
            }
        }
        let guesses = self.universe.evaluate(f)?;
        let answer = self.universe.score(&guesses);
        self.queries_used += 1;
        if let Some(t) = &mut self.transcript {
            t.push((guesses, answer));
        }
        Ok(answer)
    }
}

/// Pass-through oracle recording every answer.
pub struct RecordingClassifierOracle<'a> {
    inner: &'a mut dyn ClassifierQuery,
    answers: Vec<MatchResult>,
}

impl<'a> RecordingClassifierOracle<'a> {
    pub fn new(inner: &'a mut dyn ClassifierQuery) -> Self {
        RecordingClassifierOracle {
            inner,
            answers: Vec::new(),
        }
    }

    pub fn answers(&self) -> &[MatchResult] {
        &self.answers
    }
}

impl ClassifierQuery for RecordingClassifierOracle<'_> {
    fn test_size(&self) -> usize {
        self.inner.test_size()
    }

    fn classes(&self) -> usize {
        self.inner.classes()
    }

    fn query(&mut self, f: &dyn Classifier) -> Result<MatchResult> {
        let a = self.inner.query(f)?;
        self.answers.push(a);
        Ok(a)
    }
}

/// A k-query algorithm whose queries and output are classifiers.
pub trait FeatureAttack {
    fn name(&self) -> String;

    fn run(
        &self,
        oracle: &mut dyn ClassifierQuery,
        k: usize,
        rng: &mut dyn rand::RngCore,
    ) -> Result<Box<dyn Classifier>>;
}

impl<A: FeatureAttack + ?Sized> FeatureAttack for Box<A> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn run(
        &self,
        oracle: &mut dyn ClassifierQuery,
        k: usize,
        rng: &mut dyn rand::RngCore,
    ) -> Result<Box<dyn Classifier>> {
        (**self).run(oracle, k, rng)
    }
}

/// Zero-query uniform guessing over features.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformFeatureGuess;

struct HashedUniform {
    seed: u64,
    m: u64,
}

impl Classifier for HashedUniform {
    fn label(&self, x: FeatureId) -> Label {
        hashed_below(feature_key(self.seed, x), self.m) as Label + 1
    }
}

impl FeatureAttack for UniformFeatureGuess {
    fn name(&self) -> String {
        "random-baseline".into()
    }

    fn run(
        &self,
        oracle: &mut dyn ClassifierQuery,
        _k: usize,
        rng: &mut dyn rand::RngCore,
    ) -> Result<Box<dyn Classifier>> {
        Ok(Box::new(HashedUniform {
            seed: rng.next_u64(),
            m: oracle.classes() as u64,
        }))
    }
}
