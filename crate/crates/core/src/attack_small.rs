//! Block-voting attack for small query budgets.
//!
//! With one query the attack asks the all-ones sequence and keeps it if its
//! accuracy reaches `1/m`, otherwise it answers all twos. With `k > 1`
//! queries the examples are split into `k - 1` consecutive blocks; query `i`
//! labels the first `i - 1` blocks `1` and the rest `2`, so consecutive
//! answers differ exactly by `N_{i,1} - N_{i,2}` for block `i`. Each block is
//! then predicted with whichever of labels 1 and 2 is more frequent in it.
//!
//! The attack is deterministic and non-adaptive.

use std::ops::Range;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::oracle::{Attack, Label, LabelSequence, MatchResult, QueryOracle};

/// `k - 1` consecutive, near-equal blocks covering `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    /// Block `i` is `starts[i]..starts[i + 1]`; the last entry is `n`.
    starts: Vec<usize>,
}

impl BlockPartition {
    pub fn len(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// 0-based index range of block `i` (block `B_{i+1}`).
    pub fn block(&self, i: usize) -> Range<usize> {
        self.starts[i]..self.starts[i + 1]
    }

    pub fn blocks(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        self.starts.windows(2).map(|w| w[0]..w[1])
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks().map(|b| b.len()).collect()
    }

    /// Block containing 0-based position `j`.
    pub fn block_of(&self, j: usize) -> usize {
        self.starts.partition_point(|&s| s <= j) - 1
    }
}

/// Splits `n` positions into `k - 1` consecutive blocks whose sizes are
/// `⌈n/(k-1)⌉` (the first `n mod (k-1)` blocks) or `⌊n/(k-1)⌋`.
pub fn partition_blocks(n: usize, k: usize) -> Result<BlockPartition> {
    if k < 2 {
        return Err(Error::param(format!(
            "block partition needs k ≥ 2, got {k}; use the single-query branch"
        )));
    }
    let blocks = k - 1;
    if blocks > n {
        return Err(Error::param(format!("k - 1 = {blocks} blocks exceed n = {n}")));
    }
    let (base, extra) = (n / blocks, n % blocks);
    let mut starts = Vec::with_capacity(blocks + 1);
    let mut at = 0;
    starts.push(at);
    for i in 0..blocks {
        at += base + usize::from(i < extra);
        starts.push(at);
    }
    debug_assert_eq!(at, n);
    Ok(BlockPartition { starts })
}

/// Decision for one block, taken from two consecutive answers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockVote {
    /// 0-based block index.
    pub block: usize,
    /// Matches of the query that labels this block `2`.
    pub before: usize,
    /// Matches of the next query, which labels this block `1`.
    pub after: usize,
    pub label: Label,
}

impl BlockVote {
    /// `N_{i,1} - N_{i,2}` for the block.
    pub fn margin(&self) -> i64 {
        self.after as i64 - self.before as i64
    }
}

/// Everything one run of the attack saw and decided.
#[derive(Clone, Debug)]
pub struct SmallRun {
    pub prediction: LabelSequence,
    pub answers: Vec<MatchResult>,
    pub votes: Vec<BlockVote>,
    pub partition: Option<BlockPartition>,
}

/// Single-query branch: all ones if the all-ones query scores at least
/// `1/m`, all twos otherwise. Ties go to label 1.
pub fn run_small_k1(oracle: &mut dyn QueryOracle) -> Result<LabelSequence> {
    Ok(run_k1_traced(oracle)?.prediction)
}

fn run_k1_traced(oracle: &mut dyn QueryOracle) -> Result<SmallRun> {
    let (n, m) = (oracle.len(), oracle.classes());
    let ones = LabelSequence::constant(n, m, 1)?;
    let answer = oracle.query(&ones)?;
    // matches/n ≥ 1/m, compared in integers
    let label = if answer.matches * m >= n { 1 } else { 2 };
    Ok(SmallRun {
        prediction: LabelSequence::constant(n, m, label)?,
        answers: vec![answer],
        votes: Vec::new(),
        partition: None,
    })
}

pub fn run_small(oracle: &mut dyn QueryOracle, k: usize) -> Result<LabelSequence> {
    Ok(run_small_traced(oracle, k)?.prediction)
}

/// Runs the attack and keeps its answers and per-block votes.
pub fn run_small_traced(oracle: &mut dyn QueryOracle, k: usize) -> Result<SmallRun> {
    match k {
        0 => Err(Error::Budget { used: 0, budget: 0 }),
        1 => run_k1_traced(oracle),
        _ => run_blocks(oracle, k),
    }
}

fn run_blocks(oracle: &mut dyn QueryOracle, k: usize) -> Result<SmallRun> {
    let (n, m) = (oracle.len(), oracle.classes());
    let partition = partition_blocks(n, k)?;

    let mut query = vec![2 as Label; n];
    let mut answers = Vec::with_capacity(k);
    answers.push(oracle.query(&LabelSequence::from_valid(query.clone(), m))?);
    for block in partition.blocks() {
        query[block].fill(1);
        answers.push(oracle.query(&LabelSequence::from_valid(query.clone(), m))?);
    }

    let mut prediction = vec![0 as Label; n];
    let mut votes = Vec::with_capacity(k - 1);
    for (i, block) in partition.blocks().enumerate() {
        let (before, after) = (answers[i].matches, answers[i + 1].matches);
        let label = if after >= before { 1 } else { 2 };
        prediction[block].fill(label);
        votes.push(BlockVote {
            block: i,
            before,
            after,
            label,
        });
    }

    Ok(SmallRun {
        prediction: LabelSequence::from_valid(prediction, m),
        answers,
        votes,
        partition: Some(partition),
    })
}

/// The block-voting attack as an [`Attack`].
#[derive(Clone, Copy, Debug, Default)]
pub struct SmallAttack;

impl Attack for SmallAttack {
    fn name(&self) -> String {
        "small".into()
    }

    fn run(&self, oracle: &mut dyn QueryOracle, k: usize, _rng: &mut dyn RngCore) -> Result<LabelSequence> {
        run_small(oracle, k)
    }
}
