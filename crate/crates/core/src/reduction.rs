//! Worst-case to average-case wrapper.
//!
//! Conjugating an attack by `n` independent uniform permutations of `[m]`
//! (one per coordinate) makes every fixed hidden sequence look uniformly
//! random to the inner attack, so the wrapped attack's accuracy on any
//! sequence equals the inner attack's average accuracy under uniform labels.
//!
//! The identity `match(π(q), z) = match(q, π⁻¹(z))` is what lets the wrapper
//! forward oracle answers to the inner attack untouched.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::oracle::{check_params, Attack, Label, LabelSequence, MatchResult, QueryOracle, QuerySequence};

/// One permutation of `[m]` per coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationBundle {
    n: usize,
    m: usize,
    /// `images[i * m + (l - 1)]` is `π_i(l)`.
    images: Vec<Label>,
}

impl PermutationBundle {
    pub fn identity(n: usize, m: usize) -> Result<Self> {
        check_params(n, m)?;
        let images = (0..n).flat_map(|_| 1..=m as Label).collect();
        Ok(PermutationBundle { n, m, images })
    }

    /// Builds a bundle from explicit permutations, each given as the image
    /// list `[π(1), …, π(m)]`.
    pub fn from_perms(perms: &[Vec<Label>], m: usize) -> Result<Self> {
        check_params(perms.len(), m)?;
        let mut images = Vec::with_capacity(perms.len() * m);
        for (i, p) in perms.iter().enumerate() {
            let mut sorted = p.clone();
            sorted.sort_unstable();
            if sorted.len() != m || sorted.iter().enumerate().any(|(j, &l)| usize::from(l) != j + 1) {
                return Err(Error::param(format!(
                    "permutation {} is not a bijection of 1..={m}",
                    i + 1
                )));
            }
            images.extend_from_slice(p);
        }
        Ok(PermutationBundle {
            n: perms.len(),
            m,
            images,
        })
    }

    /// `n` independent uniform permutations (Fisher–Yates).
    pub fn sample<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Self> {
        let mut bundle = PermutationBundle::identity(n, m)?;
        for perm in bundle.images.chunks_mut(m) {
            perm.shuffle(rng);
        }
        Ok(bundle)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn classes(&self) -> usize {
        self.m
    }

    /// Image list of the permutation at 0-based coordinate `i`.
    pub fn perm(&self, i: usize) -> &[Label] {
        &self.images[i * self.m..(i + 1) * self.m]
    }

    pub fn inverse(&self) -> Self {
        let mut images = vec![0; self.images.len()];
        for (perm, inv) in self.images.chunks(self.m).zip(images.chunks_mut(self.m)) {
            for (pre, &img) in perm.iter().enumerate() {
                inv[usize::from(img) - 1] = pre as Label + 1;
            }
        }
        PermutationBundle {
            n: self.n,
            m: self.m,
            images,
        }
    }

    /// Coordinate-wise image `π_1(z_1), …, π_n(z_n)`.
    pub fn apply(&self, z: &LabelSequence) -> Result<LabelSequence> {
        if z.len() != self.n || z.classes() != self.m {
            return Err(Error::shape(format!(
                "bundle over {} coordinates and [{}] applied to a sequence of length {} over [{}]",
                self.n,
                self.m,
                z.len(),
                z.classes()
            )));
        }
        let labels = z
            .labels()
            .iter()
            .zip(self.images.chunks(self.m))
            .map(|(&l, perm)| perm[usize::from(l) - 1])
            .collect();
        Ok(LabelSequence::from_valid(labels, self.m))
    }

    pub fn is_identity(&self) -> bool {
        self.images
            .chunks(self.m)
            .all(|p| p.iter().enumerate().all(|(j, &l)| usize::from(l) == j + 1))
    }
}

pub fn sample_bundle<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<PermutationBundle> {
    PermutationBundle::sample(n, m, rng)
}

pub fn apply_bundle(b: &PermutationBundle, z: &LabelSequence) -> Result<LabelSequence> {
    b.apply(z)
}

/// Oracle adapter that maps each query through the bundle before
/// forwarding it.
pub struct PermutingOracle<'a> {
    inner: &'a mut dyn QueryOracle,
    bundle: &'a PermutationBundle,
}

impl<'a> PermutingOracle<'a> {
    pub fn new(inner: &'a mut dyn QueryOracle, bundle: &'a PermutationBundle) -> Self {
        PermutingOracle { inner, bundle }
    }
}

impl QueryOracle for PermutingOracle<'_> {
    fn len(&self) -> usize {
        self.inner.len()
    }

    fn classes(&self) -> usize {
        self.inner.classes()
    }

    fn query(&mut self, q: &QuerySequence) -> Result<MatchResult> {
        let permuted = self.bundle.apply(q)?;
        self.inner.query(&permuted)
    }
}

/// An attack conjugated by a fresh permutation bundle on every run.
#[derive(Clone, Debug)]
pub struct Permuted<A> {
    inner: A,
    fixed: Option<PermutationBundle>,
}

/// Wraps `inner` so that its worst-case accuracy equals its average
/// accuracy under uniform labels.
pub fn wrap_attack<A: Attack>(inner: A) -> Permuted<A> {
    Permuted { inner, fixed: None }
}

impl<A: Attack> Permuted<A> {
    /// Test hook: use `bundle` on every run instead of sampling one.
    /// No randomness is drawn for the bundle in this mode.
    pub fn with_fixed_bundle(inner: A, bundle: PermutationBundle) -> Self {
        Permuted {
            inner,
            fixed: Some(bundle),
        }
    }

    pub fn inner(&self) -> &A {
        &self.inner
    }
}

impl<A: Attack> Attack for Permuted<A> {
    fn name(&self) -> String {
        format!("{}+perm", self.inner.name())
    }

    fn run(&self, oracle: &mut dyn QueryOracle, k: usize, rng: &mut dyn RngCore) -> Result<LabelSequence> {
        let (n, m) = (oracle.len(), oracle.classes());
        let bundle = match &self.fixed {
            Some(b) if b.len() == n && b.classes() == m => b.clone(),
            Some(b) => {
                return Err(Error::shape(format!(
                    "fixed bundle is {}x{}, oracle is {}x{}",
                    b.len(),
                    b.classes(),
                    n,
                    m
                )))
            }
            None => PermutationBundle::sample(n, m, rng)?,
        };
        let zhat = {
            let mut adapter = PermutingOracle::new(oracle, &bundle);
            self.inner.run(&mut adapter, k, rng)?
        };
        bundle.apply(&zhat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::match_count;
    use crate::rng::stream;

    #[test]
    fn identity_bundle_is_neutral() {
        let z = LabelSequence::new(vec![3, 1, 2, 2], 3).unwrap();
        let id = PermutationBundle::identity(4, 3).unwrap();
        assert!(id.is_identity());
        assert_eq!(id.apply(&z).unwrap(), z);
    }

    #[test]
    fn all_swap_bundle() {
        let swap = PermutationBundle::from_perms(&[vec![2, 1], vec![2, 1], vec![2, 1]], 2).unwrap();
        let z = LabelSequence::new(vec![1, 2, 1], 2).unwrap();
        assert_eq!(swap.apply(&z).unwrap().labels(), &[2, 1, 2]);
    }

    #[test]
    fn from_perms_rejects_non_bijections() {
        assert!(PermutationBundle::from_perms(&[vec![1, 1, 2]], 3).is_err());
        assert!(PermutationBundle::from_perms(&[vec![1, 2]], 3).is_err());
        assert!(PermutationBundle::from_perms(&[vec![1, 2, 4]], 3).is_err());
    }

    #[test]
    fn inverse_law() {
        let mut rng = stream(5);
        for _ in 0..20 {
            let b = PermutationBundle::sample(30, 6, &mut rng).unwrap();
            let z = crate::oracle::sample_uniform_labels(30, 6, &mut rng).unwrap();
            let back = b.apply(&b.inverse().apply(&z).unwrap()).unwrap();
            assert_eq!(back, z);
            assert_eq!(b.inverse().apply(&b.apply(&z).unwrap()).unwrap(), z);
        }
    }

    #[test]
    fn sampled_perms_are_bijections_and_replayable() {
        let a = PermutationBundle::sample(50, 7, &mut stream(11)).unwrap();
        let b = PermutationBundle::sample(50, 7, &mut stream(11)).unwrap();
        assert_eq!(a, b);
        for i in 0..50 {
            let mut p = a.perm(i).to_vec();
            p.sort_unstable();
            assert_eq!(p, (1..=7).collect::<Vec<Label>>());
        }
    }

    #[test]
    fn s2_swap_frequency_is_one_half() {
        let n = 40_000;
        let b = PermutationBundle::sample(n, 2, &mut stream(3)).unwrap();
        let swaps = (0..n).filter(|&i| b.perm(i) == [2, 1]).count() as f64;
        let se = (0.25 / n as f64).sqrt();
        assert!((swaps / n as f64 - 0.5).abs() < 4.0 * se);
    }

    #[test]
    fn shape_mismatch() {
        let b = PermutationBundle::identity(3, 2).unwrap();
        assert!(b.apply(&LabelSequence::new(vec![1, 2], 2).unwrap()).is_err());
        assert!(b.apply(&LabelSequence::new(vec![1, 2, 3], 3).unwrap()).is_err());
    }

    /// π(z) is uniform on [m]^n for any fixed z: for m = 3, n = 2 the nine
    /// outcomes of the all-ones sequence should appear equally often.
    #[test]
    fn permuted_fixed_sequence_is_uniform() {
        let z = LabelSequence::constant(2, 3, 1).unwrap();
        let mut counts = [0f64; 9];
        let mut rng = stream(17);
        let trials = 90_000;
        for _ in 0..trials {
            let p = PermutationBundle::sample(2, 3, &mut rng).unwrap().apply(&z).unwrap();
            counts[usize::from(p.get(0) - 1) * 3 + usize::from(p.get(1) - 1)] += 1.0;
        }
        let expected = trials as f64 / 9.0;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        // chi-square, 8 dof, upper 1e-3 quantile
        assert!(chi2 < 26.124, "chi2={chi2} counts={counts:?}");
    }

    #[test]
    fn equivariance_on_random_instances() {
        let mut rng = stream(23);
        for _ in 0..200 {
            let n = rng.gen_range(1..40);
            let m = rng.gen_range(2..9);
            let b = PermutationBundle::sample(n, m, &mut rng).unwrap();
            let q = crate::oracle::sample_uniform_labels(n, m, &mut rng).unwrap();
            let z = crate::oracle::sample_uniform_labels(n, m, &mut rng).unwrap();
            let lhs = match_count(&b.apply(&q).unwrap(), &z).unwrap();
            let rhs = match_count(&q, &b.inverse().apply(&z).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }
}
