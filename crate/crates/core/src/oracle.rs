//! The query game: hidden label sequences, exact match counting, and the
//! budgeted accuracy oracle that attacks interact with.
//!
//! Labels are 1-based (`1..=m`) everywhere a caller can see them. Oracle
//! answers carry the integer number of matching positions rather than a
//! float so that attacks can compare accuracies exactly.

use std::fmt;

use num_rational::Ratio;
use rand::distributions::{Distribution, Uniform};
use rand::{Rng, RngCore};

use crate::error::{Error, Result};

/// A class label in `1..=m`.
pub type Label = u16;

/// Largest supported class count.
pub const MAX_CLASSES: usize = Label::MAX as usize;

/// Checks `n ≥ 1` and `2 ≤ m ≤ MAX_CLASSES`.
pub fn check_params(n: usize, m: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    if m < 2 {
        return Err(Error::param(format!("m must be at least 2, got {m}")));
    }
    if m > MAX_CLASSES {
        return Err(Error::param(format!("m must be at most {MAX_CLASSES}, got {m}")));
    }
    Ok(())
}

/// A sequence `z_1..z_n` over the alphabet `[m]`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LabelSequence {
    labels: Vec<Label>,
    m: Label,
}

/// Queries are guesses for the hidden sequence and share its shape.
pub type QuerySequence = LabelSequence;

impl LabelSequence {
    pub fn new(labels: Vec<Label>, m: usize) -> Result<Self> {
        check_params(labels.len(), m)?;
        if let Some((i, &bad)) = labels.iter().enumerate().find(|(_, &l)| l == 0 || usize::from(l) > m) {
            return Err(Error::param(format!(
                "label {bad} at position {} lies outside 1..={m}",
                i + 1
            )));
        }
        Ok(LabelSequence { labels, m: m as Label })
    }

    /// The sequence with every position set to `label`.
    pub fn constant(n: usize, m: usize, label: Label) -> Result<Self> {
        LabelSequence::new(vec![label; n], m)
    }

    /// Internal constructor for sequences that are valid by construction.
    pub(crate) fn from_valid(labels: Vec<Label>, m: usize) -> Self {
        debug_assert!(!labels.is_empty() && (2..=MAX_CLASSES).contains(&m));
        debug_assert!(labels.iter().all(|&l| l >= 1 && usize::from(l) <= m));
        LabelSequence { labels, m: m as Label }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Always false: sequences have at least one position.
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn classes(&self) -> usize {
        usize::from(self.m)
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Label at 0-based position `i`.
    pub fn get(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn into_labels(self) -> Vec<Label> {
        self.labels
    }

    pub fn check_shape(&self, other: &LabelSequence) -> Result<()> {
        if self.len() != other.len() || self.m != other.m {
            return Err(Error::shape(format!(
                "sequence of length {} over [{}] vs length {} over [{}]",
                self.len(),
                self.m,
                other.len(),
                other.m
            )));
        }
        Ok(())
    }
}

impl fmt::Debug for LabelSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LabelSequence(m={}, {:?})", self.m, self.labels)
    }
}

/// Outcome of comparing a query with the hidden sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MatchResult {
    pub matches: usize,
    pub n: usize,
}

impl MatchResult {
    pub fn hamming(&self) -> usize {
        self.n - self.matches
    }

    /// The accuracy `matches / n`, reduced.
    pub fn fraction(&self) -> Ratio<u64> {
        Ratio::new(self.matches as u64, self.n as u64)
    }

    pub fn accuracy(&self) -> f64 {
        self.matches as f64 / self.n as f64
    }
}

/// Number of equal positions in two equal-length label slices.
#[inline]
pub(crate) fn count_equal(a: &[Label], b: &[Label]) -> usize {
    debug_assert_eq!(a.len(), b.len());
    // Chunked u16 lanes keep the inner loop vectorizable.
    let mut total = 0usize;
    for (ca, cb) in a.chunks(4096).zip(b.chunks(4096)) {
        let mut lane: u16 = 0;
        for (x, y) in ca.iter().zip(cb) {
            lane += u16::from(x == y);
        }
        total += usize::from(lane);
    }
    total
}

pub fn match_count(q: &QuerySequence, z: &LabelSequence) -> Result<MatchResult> {
    q.check_shape(z)?;
    Ok(MatchResult {
        matches: count_equal(&q.labels, &z.labels),
        n: z.len(),
    })
}

/// Black-box access to a hidden sequence through accuracy queries.
#[allow(clippy::len_without_is_empty)]
pub trait QueryOracle {
    /// Length `n` of the hidden sequence.
    fn len(&self) -> usize;

    /// Alphabet size `m`.
    fn classes(&self) -> usize;

    fn query(&mut self, q: &QuerySequence) -> Result<MatchResult>;
}

/// Exact accuracy oracle over a fixed hidden sequence, with query accounting.
#[derive(Clone, Debug)]
pub struct MatchOracle {
    hidden: LabelSequence,
    queries_used: usize,
    budget: Option<usize>,
}

impl MatchOracle {
    pub fn new(hidden: LabelSequence) -> Self {
        MatchOracle {
            hidden,
            queries_used: 0,
            budget: None,
        }
    }

    pub fn with_budget(hidden: LabelSequence, budget: usize) -> Self {
        MatchOracle {
            hidden,
            queries_used: 0,
            budget: Some(budget),
        }
    }

    pub fn queries_used(&self) -> usize {
        self.queries_used
    }

    pub fn budget(&self) -> Option<usize> {
        self.budget
    }

    /// Grades a final prediction. Does not count against the budget.
    pub fn final_accuracy(&self, zhat: &LabelSequence) -> Result<MatchResult> {
        match_count(zhat, &self.hidden)
    }

    /// The hidden sequence, for graders and tests. Attacks only ever see
    /// `&mut dyn QueryOracle`, which has no such accessor.
    pub fn hidden(&self) -> &LabelSequence {
        &self.hidden
    }
}

impl QueryOracle for MatchOracle {
    fn len(&self) -> usize {
        self.hidden.len()
    }

    fn classes(&self) -> usize {
        self.hidden.classes()
    }

    fn query(&mut self, q: &QuerySequence) -> Result<MatchResult> {
        if let Some(budget) = self.budget {
            if self.queries_used >= budget {
                return Err(Error::Budget {
                    used: self.queries_used,
                    budget,
                });
            }
        }
        let answer = match_count(q, &self.hidden)?;
        self.queries_used += 1;
        Ok(answer)
    }
}

/// Pass-through oracle that records every query and its answer.
pub struct RecordingOracle<'a> {
    inner: &'a mut dyn QueryOracle,
    transcript: Vec<(QuerySequence, MatchResult)>,
}

impl<'a> RecordingOracle<'a> {
    pub fn new(inner: &'a mut dyn QueryOracle) -> Self {
        RecordingOracle {
            inner,
            transcript: Vec::new(),
        }
    }

    pub fn transcript(&self) -> &[(QuerySequence, MatchResult)] {
        &self.transcript
    }

    pub fn into_transcript(self) -> Vec<(QuerySequence, MatchResult)> {
        self.transcript
    }
}

impl QueryOracle for RecordingOracle<'_> {
    fn len(&self) -> usize {
        self.inner.len()
    }

    fn classes(&self) -> usize {
        self.inner.classes()
    }

    fn query(&mut self, q: &QuerySequence) -> Result<MatchResult> {
        let answer = self.inner.query(q)?;
        self.transcript.push((q.clone(), answer));
        Ok(answer)
    }
}

/// A k-query algorithm for the sequence game.
///
/// Implementations interact with the hidden sequence only through the
/// oracle, issue at most `k` queries, and return a full-length estimate.
pub trait Attack {
    fn name(&self) -> String;

    fn run(&self, oracle: &mut dyn QueryOracle, k: usize, rng: &mut dyn RngCore) -> Result<LabelSequence>;
}

impl<A: Attack + ?Sized> Attack for &A {
    fn name(&self) -> String {
        (**self).name()
    }

    fn run(&self, oracle: &mut dyn QueryOracle, k: usize, rng: &mut dyn RngCore) -> Result<LabelSequence> {
        (**self).run(oracle, k, rng)
    }
}

impl<A: Attack + ?Sized> Attack for Box<A> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn run(&self, oracle: &mut dyn QueryOracle, k: usize, rng: &mut dyn RngCore) -> Result<LabelSequence> {
        (**self).run(oracle, k, rng)
    }
}

/// Each coordinate independently uniform on `[m]`.
pub fn sample_uniform_labels<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<LabelSequence> {
    check_params(n, m)?;
    let dist = Uniform::new_inclusive(1, m as Label);
    let labels = dist.sample_iter(rng).take(n).collect();
    Ok(LabelSequence::from_valid(labels, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn seq(labels: &[Label], m: usize) -> LabelSequence {
        LabelSequence::new(labels.to_vec(), m).unwrap()
    }

    #[test]
    fn match_count_examples() {
        let r = match_count(&seq(&[1, 2, 3, 1], 3), &seq(&[1, 2, 1, 2], 3)).unwrap();
        assert_eq!(r.matches, 2);
        assert_eq!(r.hamming(), 2);
        assert_eq!(r.fraction(), Ratio::new(1, 2));

        let z = seq(&[3, 1, 2, 2, 1], 3);
        let r = match_count(&z, &z).unwrap();
        assert_eq!((r.matches, r.hamming()), (5, 0));

        let r = match_count(&seq(&[1, 1, 1], 2), &seq(&[2, 2, 2], 2)).unwrap();
        assert_eq!((r.matches, r.hamming()), (0, 3));
    }

    #[test]
    fn shape_errors() {
        let err = match_count(&seq(&[1, 2], 2), &seq(&[1, 2, 1], 2)).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
        let err = match_count(&seq(&[1, 2], 2), &seq(&[1, 2], 3)).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn invalid_sequences_rejected() {
        assert!(LabelSequence::new(vec![], 2).is_err());
        assert!(LabelSequence::new(vec![1], 1).is_err());
        assert!(LabelSequence::new(vec![0, 1], 2).is_err());
        assert!(LabelSequence::new(vec![1, 3], 2).is_err());
    }

    #[test]
    fn count_equal_handles_long_inputs() {
        // more than u16::MAX matches in total, spread over many chunks
        let a = vec![1 as Label; 200_000];
        let mut b = a.clone();
        b[7] = 2;
        assert_eq!(count_equal(&a, &b), 199_999);
    }

    #[test]
    fn oracle_counts_queries_and_enforces_budget() {
        let mut o = MatchOracle::with_budget(seq(&[1, 1], 2), 1);
        assert_eq!(o.queries_used(), 0);
        let r = o.query(&seq(&[1, 2], 2)).unwrap();
        assert_eq!(r.fraction(), Ratio::new(1, 2));
        assert_eq!(o.queries_used(), 1);
        let err = o.query(&seq(&[1, 2], 2)).unwrap_err();
        assert!(matches!(err, Error::Budget { used: 1, budget: 1 }));
        assert_eq!(o.queries_used(), 1);
    }

    #[test]
    fn shape_error_does_not_consume_budget() {
        let mut o = MatchOracle::with_budget(seq(&[1, 1], 2), 1);
        assert!(o.query(&seq(&[1, 1, 1], 2)).is_err());
        assert_eq!(o.queries_used(), 0);
    }

    #[test]
    fn final_accuracy_is_free() {
        let o = MatchOracle::with_budget(seq(&[1, 2], 2), 0);
        let r = o.final_accuracy(&seq(&[1, 1], 2)).unwrap();
        assert_eq!(r.fraction(), Ratio::new(1, 2));
        assert_eq!(o.final_accuracy(&seq(&[1, 2], 2)).unwrap().fraction(), Ratio::new(1, 1));
        assert_eq!(o.queries_used(), 0);
    }

    #[test]
    fn uniform_sampler_is_deterministic_and_in_range() {
        let a = sample_uniform_labels(50, 5, &mut stream(9)).unwrap();
        let b = sample_uniform_labels(50, 5, &mut stream(9)).unwrap();
        assert_eq!(a, b);
        let one = sample_uniform_labels(1, 5, &mut stream(1)).unwrap();
        assert!((1..=5).contains(&one.get(0)));
        assert!(sample_uniform_labels(0, 5, &mut stream(1)).is_err());
        assert!(sample_uniform_labels(3, 1, &mut stream(1)).is_err());
    }

    #[test]
    fn uniform_sampler_binary_frequency() {
        let n = 100_000;
        let z = sample_uniform_labels(n, 2, &mut stream(42)).unwrap();
        let ones = z.labels().iter().filter(|&&l| l == 1).count() as f64;
        let se = (0.25 / n as f64).sqrt();
        assert!((ones / n as f64 - 0.5).abs() < 4.0 * se);
    }

    /// Chi-square goodness of fit at significance 1e-3.
    #[test]
    fn uniform_sampler_chi_square() {
        // upper 1e-3 quantiles of chi-square with m-1 degrees of freedom
        for (m, critical) in [(2usize, 10.828), (3, 13.816), (5, 18.467), (10, 27.877)] {
            let n = 200_000;
            let z = sample_uniform_labels(n, m, &mut stream(m as u64)).unwrap();
            let mut counts = vec![0f64; m];
            for &l in z.labels() {
                counts[usize::from(l) - 1] += 1.0;
            }
            let expected = n as f64 / m as f64;
            let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
            assert!(chi2 < critical, "m={m} chi2={chi2}");
        }
    }
}
