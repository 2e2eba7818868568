//! Small- and large-k attacks that only see classifier accuracies.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use rand::RngCore;

use super::{BatchMemo, Classifier, ClassifierQuery, ConstantClassifier, FeatureAttack, FeatureId, TableClassifier};
use crate::attack_large::{
    balanced_column, choose_t, decode_prefix, pick_label, BalancedQueryMatrix, LabelScoreVector,
};
use crate::error::{Error, Result};
use crate::oracle::Label;
use crate::rng::{derive_seed, feature_key, hashed_below, stream};

const MEMBER: u64 = 1;
const COLUMN: u64 = 2;
const TIE: u64 = 3;

/// The block assignment `g: X → {0, …, blocks-1}`.
#[derive(Clone, Debug)]
pub enum BlockHash {
    /// `g(x)` independent and uniform, derived from `(seed, x)`.
    Hashed { seed: u64, blocks: usize },
    /// Explicit assignment; unlisted ids fall in block 0.
    Forced {
        blocks: usize,
        map: HashMap<FeatureId, usize>,
    },
}

impl BlockHash {
    pub fn blocks(&self) -> usize {
        match self {
            BlockHash::Hashed { blocks, .. } | BlockHash::Forced { blocks, .. } => *blocks,
        }
    }

    pub fn block(&self, x: FeatureId) -> usize {
        match self {
            BlockHash::Hashed { seed, blocks } => hashed_below(feature_key(*seed, x), *blocks as u64) as usize,
            BlockHash::Forced { map, .. } => map.get(&x).copied().unwrap_or(0),
        }
    }
}

/// Labels `1` on blocks `< filled`, `2` elsewhere.
struct FillClassifier<'a> {
    hash: &'a BlockHash,
    memo: &'a BatchMemo<usize>,
    filled: usize,
}

impl Classifier for FillClassifier<'_> {
    fn label(&self, x: FeatureId) -> Label {
        if self.hash.block(x) < self.filled {
            1
        } else {
            2
        }
    }

    fn label_all(&self, xs: &[FeatureId], out: &mut Vec<Label>) {
        out.clear();
        self.memo.with(
            xs,
            |x| self.hash.block(x),
            |blocks| out.extend(blocks.iter().map(|&b| 2 - Label::from(b < self.filled))),
        );
    }
}

struct BlockLabels {
    hash: BlockHash,
    labels: Vec<Label>,
}

impl Classifier for BlockLabels {
    fn label(&self, x: FeatureId) -> Label {
        self.labels[self.hash.block(x)]
    }
}

/// Block voting over a hashed partition of the feature space.
#[derive(Clone, Debug, Default)]
pub struct SmallUnknown {
    /// Test hook: use this assignment instead of sampling `g`.
    pub forced: Option<BlockHash>,
}

impl SmallUnknown {
    pub fn with_forced(hash: BlockHash) -> Self {
        SmallUnknown { forced: Some(hash) }
    }
}

impl FeatureAttack for SmallUnknown {
    fn name(&self) -> String {
        "small-unknown".into()
    }

    fn run(&self, oracle: &mut dyn ClassifierQuery, k: usize, rng: &mut dyn RngCore) -> Result<Box<dyn Classifier>> {
        let (n, m) = (oracle.test_size(), oracle.classes());
        if k == 0 {
            return Err(Error::Budget { used: 0, budget: 0 });
        }
        if k == 1 {
            let answer = oracle.query(&ConstantClassifier(1))?;
            let label = if answer.matches * m >= n { 1 } else { 2 };
            return Ok(Box::new(ConstantClassifier(label)));
        }
        let hash = match &self.forced {
            Some(h) if h.blocks() == k - 1 => h.clone(),
            Some(h) => {
                return Err(Error::param(format!(
                    "forced hash has {} blocks, k - 1 = {}",
                    h.blocks(),
                    k - 1
                )))
            }
            None => BlockHash::Hashed {
                seed: rng.next_u64(),
                blocks: k - 1,
            },
        };
        let memo = BatchMemo::new();
        let mut answers = Vec::with_capacity(k);
        for filled in 0..k {
            let query = FillClassifier {
                hash: &hash,
                memo: &memo,
                filled,
            };
            answers.push(oracle.query(&query)?.matches);
        }
        let labels = answers.windows(2).map(|w| if w[1] >= w[0] { 1 } else { 2 }).collect();
        Ok(Box::new(BlockLabels { hash, labels }))
    }
}

/// Prefix membership and per-feature query columns for one run.
struct LazyPrefix {
    member_key: u64,
    column_key: u64,
    tie_key: u64,
    n: u64,
    t: u64,
    m: usize,
    k: usize,
    cache: RefCell<HashMap<FeatureId, Rc<[Label]>>>,
    memo: BatchMemo<Option<Rc<[Label]>>>,
}

impl LazyPrefix {
    /// The query column at `x` if `x ∈ X_t`.
    fn column(&self, x: FeatureId) -> Option<Rc<[Label]>> {
        if hashed_below(feature_key(self.member_key, x), self.n) >= self.t {
            return None;
        }
        let column = self
            .cache
            .borrow_mut()
            .entry(x)
            .or_insert_with(|| {
                let mut rng = stream(feature_key(self.column_key, x));
                balanced_column(self.m, self.k, &mut rng).into()
            })
            .clone();
        Some(column)
    }
}

struct LazyRow<'a> {
    prefix: &'a LazyPrefix,
    i: usize,
}

impl Classifier for LazyRow<'_> {
    fn label(&self, x: FeatureId) -> Label {
        self.prefix.column(x).map_or(1, |c| c[self.i])
    }

    fn label_all(&self, xs: &[FeatureId], out: &mut Vec<Label>) {
        out.clear();
        self.prefix.memo.with(
            xs,
            |x| self.prefix.column(x),
            |columns| out.extend(columns.iter().map(|c| c.as_ref().map_or(1, |c| c[self.i]))),
        );
    }
}

struct LazyDecoder {
    prefix: Rc<LazyPrefix>,
    answers: Vec<usize>,
}

impl Classifier for LazyDecoder {
    fn label(&self, x: FeatureId) -> Label {
        match self.prefix.column(x) {
            None => 1,
            Some(column) => {
                let best = LabelScoreVector::from_column(&column, &self.answers, self.prefix.m).best_labels();
                let mut tie = stream(feature_key(self.prefix.tie_key, x));
                pick_label(&best, &mut tie)
            }
        }
    }
}

/// Test hook for [`LargeUnknown`]: `X_t` is `ids` and the column of
/// `ids[j]` is column `j` of `matrix`.
#[derive(Clone, Debug)]
pub struct ForcedPrefix {
    pub ids: Vec<FeatureId>,
    pub matrix: BalancedQueryMatrix,
}

struct ForcedRow<'a> {
    index: &'a HashMap<FeatureId, usize>,
    matrix: &'a BalancedQueryMatrix,
    i: usize,
}

impl Classifier for ForcedRow<'_> {
    fn label(&self, x: FeatureId) -> Label {
        self.index.get(&x).map_or(1, |&j| self.matrix.entry(self.i, j))
    }
}

/// Balanced-column prefix decoding where the prefix is a random subset of
/// the feature space containing each id with probability `t/n`.
#[derive(Clone, Debug, Default)]
pub struct LargeUnknown {
    pub force_t: Option<usize>,
    pub forced: Option<ForcedPrefix>,
}

impl LargeUnknown {
    pub fn with_forced(prefix: ForcedPrefix) -> Self {
        LargeUnknown {
            force_t: None,
            forced: Some(prefix),
        }
    }

    fn run_forced(
        prefix: &ForcedPrefix,
        oracle: &mut dyn ClassifierQuery,
        k: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Box<dyn Classifier>> {
        let matrix = &prefix.matrix;
        if matrix.k() != k || matrix.t() != prefix.ids.len() || matrix.m() != oracle.classes() {
            return Err(Error::shape("forced prefix does not match k, m or its id list"));
        }
        let index: HashMap<FeatureId, usize> = prefix.ids.iter().enumerate().map(|(j, &x)| (x, j)).collect();
        let answers = (0..k)
            .map(|i| {
                Ok(oracle
                    .query(&ForcedRow {
                        index: &index,
                        matrix,
                        i,
                    })?
                    .matches)
            })
            .collect::<Result<Vec<_>>>()?;
        let decoded = decode_prefix(matrix, &answers, rng);
        Ok(Box::new(TableClassifier {
            table: prefix.ids.iter().copied().zip(decoded).collect(),
            default: 1,
        }))
    }
}

impl FeatureAttack for LargeUnknown {
    fn name(&self) -> String {
        "large-unknown".into()
    }

    fn run(&self, oracle: &mut dyn ClassifierQuery, k: usize, rng: &mut dyn RngCore) -> Result<Box<dyn Classifier>> {
        if let Some(prefix) = &self.forced {
            return Self::run_forced(prefix, oracle, k, rng);
        }
        let (n, m) = (oracle.test_size(), oracle.classes());
        let t = match self.force_t {
            Some(t) if t == 0 || t > n => return Err(Error::param(format!("forced t = {t} must lie in 1..={n}"))),
            Some(t) => t,
            None => choose_t(n, m, k)?,
        };
        let seed = rng.next_u64();
        let prefix = Rc::new(LazyPrefix {
            member_key: derive_seed(seed, &[MEMBER]),
            column_key: derive_seed(seed, &[COLUMN]),
            tie_key: derive_seed(seed, &[TIE]),
            n: n as u64,
            t: t as u64,
            m,
            k,
            cache: RefCell::new(HashMap::new()),
            memo: BatchMemo::new(),
        });
        let answers = (0..k)
            .map(|i| Ok(oracle.query(&LazyRow { prefix: &prefix, i })?.matches))
            .collect::<Result<Vec<_>>>()?;
        Ok(Box::new(LazyDecoder { prefix, answers }))
    }
}

/// Size of `X_t ∩ S_X` for one run seed: how many test ids the lazy
/// prefix of a run seeded with `seed` would select.
pub fn prefix_hits(seed: u64, n: usize, t: usize, ids: &[FeatureId]) -> usize {
    let key = derive_seed(seed, &[MEMBER]);
    ids.iter()
        .filter(|&&x| hashed_below(feature_key(key, x), n as u64) < t as u64)
        .count()
}
