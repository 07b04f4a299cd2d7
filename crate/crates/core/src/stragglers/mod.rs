//! Non-straggler sets under random and adversarial models.
//!
//! Every attack here returns the set `T` of nodes the master *does* hear from.
//! Attacks score a candidate `T` by the error of optimal decoding on it, and
//! break ties toward the lexicographically smallest `T` (or smallest index).

use std::ops::Range;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::codes::{AssignmentMatrix, BlockLayout};
use crate::decoding::optimal_error;
use crate::error::{Error, Result};
use crate::numerics::log_binomial;
use crate::seeding;

pub mod spectral;

pub use spectral::{misclassification_fraction, spectral_community_attack, spectral_groups};

/// Largest `C(k, r)` the exhaustive attack will enumerate.
pub const BRUTEFORCE_LIMIT: f64 = 1e6;

/// Two attack scores closer than this are treated as tied.
pub const SCORE_TIE_TOL: f64 = 1e-9;

/// Sorted set of non-straggler indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StragglerPattern {
    k: usize,
    non_stragglers: Vec<usize>,
}

impl StragglerPattern {
    pub fn new(k: usize, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.is_empty() {
            return Err(Error::invalid("non-straggler set must be nonempty"));
        }
        if let Some(&last) = indices.last() {
            if last >= k {
                return Err(Error::invalid(format!("index {last} out of range for k={k}")));
            }
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("duplicate non-straggler index"));
        }
        Ok(StragglerPattern {
            k,
            non_stragglers: indices,
        })
    }

    pub fn all(k: usize) -> Self {
        assert!(k > 0);
        StragglerPattern {
            k,
            non_stragglers: (0..k).collect(),
        }
    }

    /// Pattern whose stragglers are exactly `stragglers`.
    pub fn from_stragglers(k: usize, stragglers: &[usize]) -> Result<Self> {
        let mut gone = vec![false; k];
        for &i in stragglers {
            if i >= k {
                return Err(Error::invalid(format!("index {i} out of range for k={k}")));
            }
            gone[i] = true;
        }
        Self::new(k, (0..k).filter(|&i| !gone[i]).collect())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> usize {
        self.non_stragglers.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.non_stragglers
    }

    pub fn stragglers(&self) -> Vec<usize> {
        let mut alive = vec![false; self.k];
        for &i in &self.non_stragglers {
            alive[i] = true;
        }
        (0..self.k).filter(|&i| !alive[i]).collect()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.non_stragglers.binary_search(&i).is_ok()
    }

    /// Indicator vector of `T`.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.k];
        for &i in &self.non_stragglers {
            m[i] = true;
        }
        m
    }
}

impl Serialize for StragglerPattern {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.non_stragglers.serialize(serializer)
    }
}

/// The blocks `S_0, …, S_{m-1}` tiling `0..k` in contiguous runs of `s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    k: usize,
    s: usize,
    blocks: Vec<Range<usize>>,
}

impl BlockPartition {
    pub fn new(k: usize, s: usize) -> Result<Self> {
        Self::with_layout(k, s, BlockLayout::Exact)
    }

    pub fn with_layout(k: usize, s: usize, layout: BlockLayout) -> Result<Self> {
        if k == 0 || s == 0 || s > k {
            return Err(Error::invalid(format!("invalid partition k={k}, s={s}")));
        }
        if layout == BlockLayout::Exact && !k.is_multiple_of(s) {
            return Err(Error::invalid(format!("s={s} does not divide k={k}")));
        }
        let blocks = (0..k.div_ceil(s))
            .map(|b| b * s..((b + 1) * s).min(k))
            .collect();
        Ok(BlockPartition { k, s, blocks })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_of(&self, i: usize) -> usize {
        i / self.s
    }
}

/// `T_i = S_i ∩ T` for every block.
pub fn intersect_blocks(t: &StragglerPattern, partition: &BlockPartition) -> Result<Vec<Vec<usize>>> {
    if t.k() != partition.k() {
        return Err(Error::invalid(format!(
            "pattern has k={} but partition has k={}",
            t.k(),
            partition.k()
        )));
    }
    let mut out = vec![Vec::new(); partition.len()];
    for &i in t.indices() {
        out[partition.block_of(i)].push(i);
    }
    Ok(out)
}

/// True iff every block keeps at least one non-straggler.
pub fn all_blocks_hit(t: &StragglerPattern, partition: &BlockPartition) -> bool {
    let mut hit = vec![false; partition.len()];
    for &i in t.indices() {
        hit[partition.block_of(i)] = true;
    }
    hit.into_iter().all(|h| h)
}

/// Uniform `r`-subset of `0..k`: the first `r` entries of a seeded shuffle,
/// so with a fixed seed the subsets are nested in `r`.
pub fn sample_random_nonstragglers(k: usize, r: usize, seed: u64) -> Result<StragglerPattern> {
    if r == 0 || r > k {
        return Err(Error::invalid(format!("need 1 <= r <= k, got r={r}, k={k}")));
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(&mut seeding::rng(seed));
    order.truncate(r);
    StragglerPattern::new(k, order)
}

/// Straggles whole blocks from the front, then the lowest indices of the next
/// block until exactly `k − r` nodes are gone.
pub fn block_attack(partition: &BlockPartition, r: usize) -> Result<StragglerPattern> {
    let k = partition.k();
    if r == 0 || r > k {
        return Err(Error::invalid(format!("need 1 <= r <= k, got r={r}, k={k}")));
    }
    StragglerPattern::new(k, ((k - r)..k).collect())
}

/// Whole-block attack: the first blocks straggle. `k − r` must cover whole blocks.
pub fn frc_block_attack(partition: &BlockPartition, r: usize) -> Result<StragglerPattern> {
    let k = partition.k();
    if r == 0 || r > k {
        return Err(Error::invalid(format!("need 1 <= r <= k, got r={r}, k={k}")));
    }
    let gone = k - r;
    let whole = partition.blocks().iter().any(|b| b.start == gone) || gone == k;
    if !whole {
        return Err(Error::invalid(format!(
            "k - r = {gone} is not a whole number of blocks of size {}",
            partition.s()
        )));
    }
    block_attack(partition, r)
}

fn check_attack_args(g: &AssignmentMatrix, r: usize) -> Result<usize> {
    let k = g.k();
    if r == 0 || r > k {
        return Err(Error::invalid(format!("need 1 <= r <= k, got r={r}, k={k}")));
    }
    Ok(k)
}

/// Exhaustive search for the `T` of size `r` maximizing optimal-decoding error.
pub fn bruteforce_attack(g: &AssignmentMatrix, r: usize) -> Result<StragglerPattern> {
    let k = check_attack_args(g, r)?;
    let log_count = log_binomial(k as u64, r as u64)?;
    if log_count > BRUTEFORCE_LIMIT.ln() + 1e-9 {
        return Err(Error::ResourceLimit(format!(
            "brute-force attack needs C({k}, {r}) ≈ {:.3e} evaluations, limit is {BRUTEFORCE_LIMIT:e}",
            log_count.exp()
        )));
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    for chunk in &(0..k).combinations(r).chunks(1024) {
        let chunk: Vec<Vec<usize>> = chunk.collect();
        let scores = chunk
            .par_iter()
            .map(|t| optimal_error(&g.g, t))
            .collect::<Result<Vec<f64>>>()?;
        // enumeration is lexicographic, so keeping the first of a tie keeps the smallest T
        for (t, score) in chunk.into_iter().zip(scores) {
            if best.as_ref().is_none_or(|(b, _)| score > b + SCORE_TIE_TOL) {
                best = Some((score, t));
            }
        }
    }
    let (_, t) = best.expect("at least one subset");
    StragglerPattern::new(k, t)
}

/// Removes, `k − r` times, the node whose loss raises optimal-decoding error most.
pub fn greedy_attack(g: &AssignmentMatrix, r: usize) -> Result<StragglerPattern> {
    let k = check_attack_args(g, r)?;
    let mut alive: Vec<usize> = (0..k).collect();
    for _ in 0..(k - r) {
        let scores = (0..alive.len())
            .into_par_iter()
            .map(|pos| {
                let candidate: Vec<usize> = alive
                    .iter()
                    .enumerate()
                    .filter(|&(p, _)| p != pos)
                    .map(|(_, &i)| i)
                    .collect();
                optimal_error(&g.g, &candidate)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut best = 0;
        for (pos, &score) in scores.iter().enumerate() {
            if score > scores[best] + SCORE_TIE_TOL {
                best = pos;
            }
        }
        alive.remove(best);
    }
    StragglerPattern::new(k, alive)
}

/// A code whose rows and columns have been shuffled by a hidden permutation.
#[derive(Debug, Clone)]
pub struct PermutedCode {
    pub matrix: AssignmentMatrix,
    perm: Vec<usize>,
}

impl PermutedCode {
    /// Shuffles `g` so that permuted index `i` is original index `perm[i]`.
    pub fn new(g: &AssignmentMatrix, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..g.k()).collect();
        perm.shuffle(&mut seeding::rng(seed));
        Self::with_permutation(g, perm).expect("shuffle is a permutation")
    }

    pub fn with_permutation(g: &AssignmentMatrix, perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; g.k()];
        if perm.len() != g.k() {
            return Err(Error::invalid("permutation length differs from k"));
        }
        for &p in &perm {
            if p >= g.k() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::invalid("not a permutation"));
            }
        }
        let matrix = AssignmentMatrix {
            spec: g.spec,
            g: g.g.permute_symmetric(&perm),
            seed: g.seed,
        };
        Ok(PermutedCode { matrix, perm })
    }

    /// The hidden permutation. Attacks never look at this; evaluation does.
    pub fn hidden_permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Original matrix, recovered by undoing the permutation.
    pub fn unpermute(&self) -> crate::numerics::Matrix {
        let mut inv = vec![0; self.perm.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        self.matrix.g.permute_symmetric(&inv)
    }

    /// True block label of each permuted index.
    pub fn true_labels(&self) -> Vec<usize> {
        self.perm.iter().map(|&p| self.matrix.spec.block_of(p)).collect()
    }
}
