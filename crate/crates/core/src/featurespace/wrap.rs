//! Per-feature label permutations: the worst-case-to-average-case reduction
//! lifted to classifiers.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use rand::seq::SliceRandom;
use rand::RngCore;

use super::{BatchMemo, Classifier, ClassifierQuery, FeatureAttack, FeatureId};
use crate::error::{Error, Result};
use crate::oracle::{Label, MatchResult};
use crate::rng::{feature_key, stream};

#[derive(Clone, Debug)]
enum PermSource {
    Seeded(u64),
    Identity,
    Table(HashMap<FeatureId, Vec<Label>>),
}

/// The permutations `π_x` of one run, sampled on first use and cached.
#[derive(Debug)]
pub struct FeaturePermCache {
    m: usize,
    source: PermSource,
    cache: RefCell<HashMap<FeatureId, Rc<[Label]>>>,
    batch: BatchMemo<Rc<[Label]>>,
}

impl FeaturePermCache {
    /// `π_x` uniform on the symmetric group, independent across ids.
    pub fn seeded(seed: u64, m: usize) -> Self {
        Self::with_source(PermSource::Seeded(seed), m)
    }

    pub fn identity(m: usize) -> Self {
        Self::with_source(PermSource::Identity, m)
    }

    /// Explicit permutations (`perm[l - 1] = π_x(l)`); unlisted ids get the identity.
    pub fn from_table(table: HashMap<FeatureId, Vec<Label>>, m: usize) -> Result<Self> {
        for (x, perm) in &table {
            let mut seen = vec![false; m];
            if perm.len() != m {
                return Err(Error::shape(format!(
                    "permutation at {x} has length {}, expected {m}",
                    perm.len()
                )));
            }
            for &l in perm {
                let i = usize::from(l).wrapping_sub(1);
                if i >= m || std::mem::replace(&mut seen[i], true) {
                    return Err(Error::param(format!(
                        "permutation at {x} is not a bijection of 1..={m}"
                    )));
                }
            }
        }
        Ok(Self::with_source(PermSource::Table(table), m))
    }

    fn with_source(source: PermSource, m: usize) -> Self {
        FeaturePermCache {
            m,
            source,
            cache: RefCell::new(HashMap::new()),
            batch: BatchMemo::new(),
        }
    }

    pub fn perm(&self, x: FeatureId) -> Rc<[Label]> {
        self.cache
            .borrow_mut()
            .entry(x)
            .or_insert_with(|| {
                let mut p: Vec<Label> = (1..=self.m as Label).collect();
                match &self.source {
                    PermSource::Seeded(seed) => p.shuffle(&mut stream(feature_key(*seed, x))),
                    PermSource::Identity => {}
                    PermSource::Table(t) => {
                        if let Some(q) = t.get(&x) {
                            p.clone_from(q);
                        }
                    }
                }
                p.into()
            })
            .clone()
    }

    /// `π_x(l)`.
    pub fn apply(&self, x: FeatureId, l: Label) -> Label {
        self.perm(x)[usize::from(l) - 1]
    }

    /// `out[i] = π_{xs[i]}(out[i])`.
    pub fn apply_all(&self, xs: &[FeatureId], out: &mut [Label]) {
        self.batch.with(
            xs,
            |x| self.perm(x),
            |perms| {
                for (l, p) in out.iter_mut().zip(perms) {
                    *l = p[usize::from(*l) - 1];
                }
            },
        );
    }

    /// `π_x⁻¹(l)`.
    pub fn invert(&self, x: FeatureId, l: Label) -> Label {
        let p = self.perm(x);
        p.iter().position(|&v| v == l).map_or(l, |i| i as Label + 1)
    }
}

struct PermutedRef<'a> {
    inner: &'a dyn Classifier,
    perms: &'a FeaturePermCache,
}

impl Classifier for PermutedRef<'_> {
    fn label(&self, x: FeatureId) -> Label {
        self.perms.apply(x, self.inner.label(x))
    }

    fn label_all(&self, xs: &[FeatureId], out: &mut Vec<Label>) {
        self.inner.label_all(xs, out);
        self.perms.apply_all(xs, out);
    }
}

struct PermutedOwned {
    inner: Box<dyn Classifier>,
    perms: Rc<FeaturePermCache>,
}

impl Classifier for PermutedOwned {
    fn label(&self, x: FeatureId) -> Label {
        self.perms.apply(x, self.inner.label(x))
    }

    fn label_all(&self, xs: &[FeatureId], out: &mut Vec<Label>) {
        self.inner.label_all(xs, out);
        self.perms.apply_all(xs, out);
    }
}

/// Forwards `x ↦ π_x(f(x))` for every submitted `f`.
pub struct PermutingClassifierOracle<'a> {
    inner: &'a mut dyn ClassifierQuery,
    perms: &'a FeaturePermCache,
}

impl<'a> PermutingClassifierOracle<'a> {
    pub fn new(inner: &'a mut dyn ClassifierQuery, perms: &'a FeaturePermCache) -> Self {
        PermutingClassifierOracle { inner, perms }
    }
}

impl ClassifierQuery for PermutingClassifierOracle<'_> {
    fn test_size(&self) -> usize {
        self.inner.test_size()
    }

    fn classes(&self) -> usize {
        self.inner.classes()
    }

    fn query(&mut self, f: &dyn Classifier) -> Result<MatchResult> {
        self.inner.query(&PermutedRef {
            inner: f,
            perms: self.perms,
        })
    }
}

/// A feature attack conjugated by fresh per-feature permutations on every run.
#[derive(Clone, Debug)]
pub struct FeaturePermuted<A> {
    inner: A,
    identity: bool,
}

pub fn wrap_attack_features<A: FeatureAttack>(inner: A) -> FeaturePermuted<A> {
    FeaturePermuted { inner, identity: false }
}

impl<A: FeatureAttack> FeaturePermuted<A> {
    /// Test hook: every `π_x` is the identity and no randomness is drawn for them.
    pub fn with_identity(inner: A) -> Self {
        FeaturePermuted { inner, identity: true }
    }

    pub fn inner(&self) -> &A {
        &self.inner
    }
}

impl<A: FeatureAttack> FeatureAttack for FeaturePermuted<A> {
    fn name(&self) -> String {
        format!("{}+perm", self.inner.name())
    }

    fn run(&self, oracle: &mut dyn ClassifierQuery, k: usize, rng: &mut dyn RngCore) -> Result<Box<dyn Classifier>> {
        let m = oracle.classes();
        let perms = Rc::new(if self.identity {
            FeaturePermCache::identity(m)
        } else {
            FeaturePermCache::seeded(rng.next_u64(), m)
        });
        let inner = {
            let mut adapter = PermutingClassifierOracle::new(oracle, &perms);
            self.inner.run(&mut adapter, k, rng)?
        };
        Ok(Box::new(PermutedOwned { inner, perms }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurespace::{
        ClassifierOracle, FeatureUniverse, HiddenLabeling, LargeUnknown, SmallUnknown, TableClassifier,
    };
    use crate::oracle::{sample_uniform_labels, LabelSequence};

    #[test]
    fn identity_hook_reproduces_inner_transcript() {
        let z = sample_uniform_labels(30, 4, &mut stream(1)).unwrap();
        for k in [1, 4, 9] {
            let mut plain = ClassifierOracle::new(FeatureUniverse::sequential(&z)).recording();
            let f = SmallUnknown::default().run(&mut plain, k, &mut stream(2)).unwrap();
            let mut wrapped = ClassifierOracle::new(FeatureUniverse::sequential(&z)).recording();
            let g = FeaturePermuted::with_identity(SmallUnknown::default())
                .run(&mut wrapped, k, &mut stream(2))
                .unwrap();
            assert_eq!(plain.transcript(), wrapped.transcript());
            assert!((0..30).all(|x| f.label(x) == g.label(x)));
        }
        let mut plain = ClassifierOracle::new(FeatureUniverse::sequential(&z)).recording();
        LargeUnknown::default().run(&mut plain, 40, &mut stream(3)).unwrap();
        let mut wrapped = ClassifierOracle::new(FeatureUniverse::sequential(&z)).recording();
        FeaturePermuted::with_identity(LargeUnknown::default())
            .run(&mut wrapped, 40, &mut stream(3))
            .unwrap();
        assert_eq!(plain.transcript(), wrapped.transcript());
    }

    fn all_sequences(n: usize, m: usize) -> Vec<Vec<Label>> {
        let mut out = vec![vec![]];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|s| {
                    (1..=m as Label).map(move |l| {
                        let mut t = s.clone();
                        t.push(l);
                        t
                    })
                })
                .collect();
        }
        out
    }

    fn all_perms(m: usize) -> Vec<Vec<Label>> {
        all_sequences(m, m)
            .into_iter()
            .filter(|p| {
                let mut q = p.clone();
                q.sort_unstable();
                q.dedup();
                q.len() == m
            })
            .collect()
    }

    fn table(s: &[Label]) -> TableClassifier {
        TableClassifier {
            table: s.iter().enumerate().map(|(x, &l)| (x as FeatureId, l)).collect(),
            default: 1,
        }
    }

    /// acc(f_π, f) = acc(f, π⁻¹∘f) over every bundle, query and labeling.
    #[test]
    fn equivariance_is_exhaustive_on_tiny_universes() {
        for &(size, m) in &[(1, 2), (2, 2), (3, 2), (4, 2), (1, 3), (2, 3), (3, 3)] {
            let perms = all_perms(m);
            let seqs = all_sequences(size, m);
            for bundle in all_sequences(size, perms.len()) {
                let map = bundle
                    .iter()
                    .enumerate()
                    .map(|(x, &b)| (x as FeatureId, perms[usize::from(b) - 1].clone()))
                    .collect();
                let cache = FeaturePermCache::from_table(map, m).unwrap();
                for truth in &seqs {
                    let pulled: Vec<Label> = truth
                        .iter()
                        .enumerate()
                        .map(|(x, &l)| cache.invert(x as FeatureId, l))
                        .collect();
                    let lhs_u = FeatureUniverse::sequential(&LabelSequence::new(truth.clone(), m).unwrap());
                    let rhs_u = FeatureUniverse::sequential(&LabelSequence::new(pulled, m).unwrap());
                    for q in &seqs {
                        let f = table(q);
                        let mut lhs = ClassifierOracle::new(lhs_u.clone());
                        let mut adapter = PermutingClassifierOracle::new(&mut lhs, &cache);
                        let a = adapter.query(&f).unwrap();
                        let b = rhs_u.accuracy_of(&f).unwrap();
                        assert_eq!(a, b);
                    }
                }
            }
        }
    }

    #[test]
    fn seeded_perms_are_uniform_and_cached() {
        let cache = FeaturePermCache::seeded(8, 3);
        let mut counts: HashMap<Vec<Label>, usize> = HashMap::new();
        for x in 0..6000 {
            *counts.entry(cache.perm(x).to_vec()).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        // 5 dof, 1e-3 critical value
        let chi2: f64 = counts.values().map(|&c| (c as f64 - 1000.0).powi(2) / 1000.0).sum();
        assert!(chi2 < 20.515, "{chi2}");
        let again: Vec<_> = (0..50).map(|x| cache.perm(x)).collect();
        let fresh = FeaturePermCache::seeded(8, 3);
        assert!((0..50).rev().all(|x| fresh.perm(x) == again[x as usize]));
        for l in 1..=3 {
            assert_eq!(cache.invert(7, cache.apply(7, l)), l);
        }
        let xs: Vec<FeatureId> = (100..160).collect();
        let mut batch: Vec<Label> = xs.iter().map(|&x| (x % 3) as Label + 1).collect();
        let pointwise: Vec<Label> = xs.iter().zip(&batch).map(|(&x, &l)| cache.apply(x, l)).collect();
        cache.apply_all(&xs, &mut batch);
        assert_eq!(batch, pointwise);
    }

    #[test]
    fn table_rejects_non_bijections() {
        assert!(FeaturePermCache::from_table([(0, vec![1, 1])].into(), 2).is_err());
        assert!(FeaturePermCache::from_table([(0, vec![1])].into(), 2).is_err());
        assert!(FeaturePermCache::from_table([(0, vec![2, 1])].into(), 2).is_ok());
    }

    #[test]
    fn wrapping_consumes_budget_like_inner() {
        let u = FeatureUniverse::sample(20, 100, 3, HiddenLabeling::Constant(2), &mut stream(4)).unwrap();
        let mut o = ClassifierOracle::with_budget(u, 5);
        wrap_attack_features(SmallUnknown::default())
            .run(&mut o, 5, &mut stream(5))
            .unwrap();
        assert_eq!(o.queries_used(), 5);
    }
}
