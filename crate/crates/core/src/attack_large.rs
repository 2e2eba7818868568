//! Balanced-column attack for large query budgets.
//!
//! The first `t` examples each get a column of `k` query labels in which
//! every label appears `k/m` times, arranged uniformly at random and
//! independently across examples; the remaining examples are queried with
//! `1` throughout. After the `k` non-adaptive queries, example `j ≤ t` is
//! decoded as the label whose queries scored the highest total accuracy.
//! The rest are predicted `1`.
//!
//! Logarithms are natural throughout.

use rand::seq::{index, SliceRandom};
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::oracle::{check_params, Attack, Label, LabelSequence, MatchResult, QueryOracle};

/// Prefix length `t = ⌊1 + k / (9 ln m)⌋`, clamped to `[1, n]`.
pub fn choose_t(n: usize, m: usize, k: usize) -> Result<usize> {
    check_params(n.max(1), m)?;
    let raw = 1.0 + k as f64 / (9.0 * (m as f64).ln());
    Ok((raw.floor() as usize).clamp(1, n.max(1)))
}

/// A length-`k` column with `⌊k/m⌋` copies of every label plus one extra
/// copy for each of `k mod m` labels chosen uniformly without replacement,
/// in uniformly random order.
pub fn balanced_column<R: Rng + ?Sized>(m: usize, k: usize, rng: &mut R) -> Vec<Label> {
    let (base, extra) = (k / m, k % m);
    let mut column = Vec::with_capacity(k);
    for label in 1..=m as Label {
        column.extend(std::iter::repeat(label).take(base));
    }
    if extra > 0 {
        for pick in index::sample(rng, m, extra) {
            column.push(pick as Label + 1);
        }
    }
    column.shuffle(rng);
    column
}

/// The `k × n` query matrix. Only the first `t` columns are stored; the
/// rest are identically `1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BalancedQueryMatrix {
    n: usize,
    m: usize,
    k: usize,
    t: usize,
    /// Column-major: `prefix[j * k + i]` is the label of query `i` at example `j`.
    prefix: Vec<Label>,
}

impl BalancedQueryMatrix {
    /// Builds a matrix from explicit prefix columns (test hook).
    pub fn from_columns(n: usize, m: usize, k: usize, columns: &[Vec<Label>]) -> Result<Self> {
        check_params(n, m)?;
        let t = columns.len();
        if t == 0 || t > n {
            return Err(Error::param(format!("prefix length {t} must lie in 1..={n}")));
        }
        let mut prefix = Vec::with_capacity(t * k);
        for (j, col) in columns.iter().enumerate() {
            if col.len() != k || col.iter().any(|&l| l == 0 || usize::from(l) > m) {
                return Err(Error::param(format!(
                    "column {} must hold {k} labels in 1..={m}",
                    j + 1
                )));
            }
            prefix.extend_from_slice(col);
        }
        Ok(BalancedQueryMatrix { n, m, k, t, prefix })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Labels of all `k` queries at 0-based example `j`.
    pub fn column(&self, j: usize) -> Vec<Label> {
        if j < self.t {
            self.prefix[j * self.k..(j + 1) * self.k].to_vec()
        } else {
            vec![1; self.k]
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> Label {
        if j < self.t {
            self.prefix[j * self.k + i]
        } else {
            1
        }
    }

    /// Query `i` (0-based) as a full sequence.
    pub fn row(&self, i: usize) -> LabelSequence {
        let mut labels = vec![1 as Label; self.n];
        for (j, slot) in labels.iter_mut().take(self.t).enumerate() {
            *slot = self.prefix[j * self.k + i];
        }
        LabelSequence::from_valid(labels, self.m)
    }

    /// How often each label appears in column `j`; index `l - 1` holds label `l`.
    pub fn column_counts(&self, j: usize) -> Vec<usize> {
        let mut counts = vec![0; self.m];
        for i in 0..self.k {
            counts[usize::from(self.entry(i, j)) - 1] += 1;
        }
        counts
    }
}

/// Samples the matrix: `t` independent balanced columns, constant `1` elsewhere.
pub fn build_queries<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    k: usize,
    t: usize,
    rng: &mut R,
) -> Result<BalancedQueryMatrix> {
    check_params(n, m)?;
    if t == 0 || t > n {
        return Err(Error::param(format!("prefix length t = {t} must lie in 1..={n}")));
    }
    let mut prefix = Vec::with_capacity(t * k);
    for _ in 0..t {
        prefix.extend(balanced_column(m, k, rng));
    }
    Ok(BalancedQueryMatrix { n, m, k, t, prefix })
}

/// Per-label evidence for one example: total matches of the queries that
/// assigned it that label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelScoreVector {
    /// `scores[l - 1]` sums the match counts of queries labelling the example `l`.
    pub scores: Vec<u64>,
    /// Number of summands behind each score.
    pub counts: Vec<usize>,
}

impl LabelScoreVector {
    pub fn from_column(column: &[Label], answers: &[usize], m: usize) -> Self {
        debug_assert_eq!(column.len(), answers.len());
        let mut scores = vec![0u64; m];
        let mut counts = vec![0usize; m];
        for (&label, &matches) in column.iter().zip(answers) {
            let l = usize::from(label) - 1;
            scores[l] += matches as u64;
            counts[l] += 1;
        }
        LabelScoreVector { scores, counts }
    }

    /// Labels with the highest per-query average score. Labels that no
    /// query assigned carry no evidence and are skipped; when every count
    /// is zero the result is `[1]`.
    pub fn best_labels(&self) -> Vec<Label> {
        let mut best: Vec<Label> = Vec::new();
        let mut lead: Option<(u64, usize)> = None;
        for (l, (&score, &count)) in self.scores.iter().zip(&self.counts).enumerate() {
            if count == 0 {
                continue;
            }
            let label = l as Label + 1;
            match lead {
                None => {
                    lead = Some((score, count));
                    best.push(label);
                }
                Some((s, c)) => {
                    // score/count vs s/c, cross-multiplied
                    let lhs = u128::from(score) * c as u128;
                    let rhs = u128::from(s) * count as u128;
                    if lhs > rhs {
                        lead = Some((score, count));
                        best.clear();
                        best.push(label);
                    } else if lhs == rhs {
                        best.push(label);
                    }
                }
            }
        }
        if best.is_empty() {
            best.push(1);
        }
        best
    }
}

pub fn label_scores(matrix: &BalancedQueryMatrix, answers: &[usize], j: usize) -> LabelScoreVector {
    LabelScoreVector::from_column(&matrix.column(j), answers, matrix.m)
}

/// Picks uniformly among tied labels. Draws from `rng` only on a tie.
pub(crate) fn pick_label<R: Rng + ?Sized>(best: &[Label], rng: &mut R) -> Label {
    match best {
        [only] => *only,
        _ => best[rng.gen_range(0..best.len())],
    }
}

/// Decodes the prefix examples in order `0..t`.
pub fn decode_prefix<R: Rng + ?Sized>(matrix: &BalancedQueryMatrix, answers: &[usize], rng: &mut R) -> Vec<Label> {
    (0..matrix.t)
        .map(|j| pick_label(&label_scores(matrix, answers, j).best_labels(), rng))
        .collect()
}

#[derive(Clone, Debug)]
pub struct LargeRun {
    pub prediction: LabelSequence,
    pub matrix: BalancedQueryMatrix,
    pub answers: Vec<MatchResult>,
}

/// Submits every row of `matrix`, then decodes.
pub fn run_large_with_matrix<R: Rng + ?Sized>(
    oracle: &mut dyn QueryOracle,
    matrix: BalancedQueryMatrix,
    rng: &mut R,
) -> Result<LargeRun> {
    if matrix.n != oracle.len() || matrix.m != oracle.classes() {
        return Err(Error::shape(format!(
            "query matrix over n={}, m={} but oracle has n={}, m={}",
            matrix.n,
            matrix.m,
            oracle.len(),
            oracle.classes()
        )));
    }
    // the whole matrix exists before the first answer is read
    let answers = (0..matrix.k)
        .map(|i| oracle.query(&matrix.row(i)))
        .collect::<Result<Vec<_>>>()?;
    let counts: Vec<usize> = answers.iter().map(|a| a.matches).collect();
    let mut labels = decode_prefix(&matrix, &counts, rng);
    labels.resize(matrix.n, 1);
    Ok(LargeRun {
        prediction: LabelSequence::from_valid(labels, matrix.m),
        matrix,
        answers,
    })
}

pub fn run_large_with_t<R: Rng + ?Sized>(
    oracle: &mut dyn QueryOracle,
    k: usize,
    t: usize,
    rng: &mut R,
) -> Result<LargeRun> {
    let matrix = build_queries(oracle.len(), oracle.classes(), k, t, rng)?;
    run_large_with_matrix(oracle, matrix, rng)
}

pub fn run_large<R: Rng + ?Sized>(oracle: &mut dyn QueryOracle, k: usize, rng: &mut R) -> Result<LabelSequence> {
    let t = choose_t(oracle.len(), oracle.classes(), k)?;
    Ok(run_large_with_t(oracle, k, t, rng)?.prediction)
}

/// The balanced-column attack as an [`Attack`]. `force_t` overrides the
/// prefix length.
#[derive(Clone, Copy, Debug, Default)]
pub struct LargeAttack {
    pub force_t: Option<usize>,
}

impl LargeAttack {
    pub fn prefix_len(&self, n: usize, m: usize, k: usize) -> Result<usize> {
        match self.force_t {
            Some(t) if t == 0 || t > n => Err(Error::param(format!("forced t = {t} must lie in 1..={n}"))),
            Some(t) => Ok(t),
            None => choose_t(n, m, k),
        }
    }
}

impl Attack for LargeAttack {
    fn name(&self) -> String {
        "large".into()
    }

    fn run(&self, oracle: &mut dyn QueryOracle, k: usize, rng: &mut dyn RngCore) -> Result<LabelSequence> {
        let t = self.prefix_len(oracle.len(), oracle.classes(), k)?;
        Ok(run_large_with_t(oracle, k, t, rng)?.prediction)
    }
}
