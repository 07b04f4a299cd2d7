//! Function-assignment matrices for the stochastic block code family.
//!
//! Row `i` of `G` is function `i`, column `j` is node `j`. Block `b` covers
//! rows and columns `b·s .. b·s + s`. Entries inside a diagonal block are
//! Bernoulli(`p`), entries outside are Bernoulli(`q`). With `p = 1, q = 0` this
//! is a fractional repetition code, with `p = q` a Bernoulli gradient code.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::seeding;
use crate::stragglers::BlockPartition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CodeFamily {
    Sbc,
    Frc,
    Bgc,
}

impl CodeFamily {
    /// The narrowest family describing `(p, q)`.
    pub fn classify(p: f64, q: f64) -> Self {
        if p == 1.0 && q == 0.0 {
            CodeFamily::Frc
        } else if p == q {
            CodeFamily::Bgc
        } else {
            CodeFamily::Sbc
        }
    }
}

impl fmt::Display for CodeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodeFamily::Sbc => "SBC",
            CodeFamily::Frc => "FRC",
            CodeFamily::Bgc => "BGC",
        })
    }
}

/// How blocks tile `0..k`.
///
/// `Exact` requires `s | k`. `Truncated` allows any `s ≤ k` and shortens the
/// final block to `k mod s` entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BlockLayout {
    #[default]
    Exact,
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeSpec {
    pub k: usize,
    pub s: usize,
    pub p: f64,
    pub q: f64,
    pub family: CodeFamily,
    #[serde(default)]
    pub layout: BlockLayout,
}

impl CodeSpec {
    pub fn new(
        k: usize,
        s: usize,
        p: f64,
        q: f64,
        family: CodeFamily,
        layout: BlockLayout,
    ) -> Result<Self> {
        let spec = CodeSpec {
            k,
            s,
            p,
            q,
            family,
            layout,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn sbc(k: usize, s: usize, p: f64, q: f64) -> Result<Self> {
        Self::new(k, s, p, q, CodeFamily::Sbc, BlockLayout::Exact)
    }

    pub fn frc(k: usize, s: usize) -> Result<Self> {
        Self::new(k, s, 1.0, 0.0, CodeFamily::Frc, BlockLayout::Exact)
    }

    pub fn bgc(k: usize, s: usize, p: f64) -> Result<Self> {
        Self::new(k, s, p, p, CodeFamily::Bgc, BlockLayout::Exact)
    }

    /// Same parameters with a different block layout, revalidated.
    pub fn with_layout(self, layout: BlockLayout) -> Result<Self> {
        Self::new(self.k, self.s, self.p, self.q, self.family, layout)
    }

    pub fn validate(&self) -> Result<()> {
        let CodeSpec { k, s, p, q, .. } = *self;
        if k == 0 || s == 0 {
            return Err(Error::invalid(format!("k and s must be positive (k={k}, s={s})")));
        }
        if s > k {
            return Err(Error::invalid(format!("block size s={s} exceeds k={k}")));
        }
        if self.layout == BlockLayout::Exact && k % s != 0 {
            return Err(Error::invalid(format!("s={s} does not divide k={k}")));
        }
        for (name, v) in [("p", p), ("q", q)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name}={v} is not a probability")));
            }
        }
        if q > p {
            return Err(Error::invalid(format!("need q <= p, got p={p}, q={q}")));
        }
        match self.family {
            CodeFamily::Frc if !(p == 1.0 && q == 0.0) => Err(Error::invalid(format!(
                "FRC requires p=1, q=0 (got p={p}, q={q})"
            ))),
            CodeFamily::Bgc if p != q => Err(Error::invalid(format!(
                "BGC requires p=q (got p={p}, q={q})"
            ))),
            _ => Ok(()),
        }
    }

    pub fn partition(&self) -> BlockPartition {
        BlockPartition::with_layout(self.k, self.s, self.layout)
            .expect("validated spec has a valid partition")
    }

    /// Number of blocks, `⌈k/s⌉`.
    pub fn num_blocks(&self) -> usize {
        self.k.div_ceil(self.s)
    }

    #[inline]
    pub fn block_of(&self, index: usize) -> usize {
        index / self.s
    }

    /// Entry probability at `(i, j)`.
    #[inline]
    pub fn entry_prob(&self, i: usize, j: usize) -> f64 {
        if self.block_of(i) == self.block_of(j) {
            self.p
        } else {
            self.q
        }
    }
}

/// A realized `k × k` binary assignment matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentMatrix {
    pub spec: CodeSpec,
    pub g: Matrix,
    pub seed: u64,
}

impl AssignmentMatrix {
    pub fn k(&self) -> usize {
        self.spec.k
    }

    pub fn column_weight(&self, j: usize) -> usize {
        (0..self.k()).filter(|&i| self.g.get(i, j) != 0.0).count()
    }

    /// Dense 0/1 CSV, one row per line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write_binary_csv(&self.g, &mut out)
    }
}

pub fn write_binary_csv<W: Write>(g: &Matrix, out: &mut W) -> Result<()> {
    for i in 0..g.rows() {
        let line = g
            .row(i)
            .iter()
            .map(|&x| if x != 0.0 { "1" } else { "0" })
            .collect::<Vec<_>>()
            .join(",");
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Parses a dense 0/1 CSV matrix.
pub fn read_binary_csv<R: BufRead>(input: R) -> Result<Matrix> {
    let mut rows = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|cell| match cell.trim() {
                "0" => Ok(0.0),
                "1" => Ok(1.0),
                other => Err(Error::invalid(format!(
                    "line {}: expected 0 or 1, found {other:?}",
                    lineno + 1
                ))),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::invalid("empty matrix CSV"));
    }
    Matrix::from_rows(&rows)
}

fn sample(spec: CodeSpec, seed: u64) -> AssignmentMatrix {
    let k = spec.k;
    let g = Matrix::from_fn(k, k, |i, j| {
        if seeding::entry_uniform(seed, i, j, k) < spec.entry_prob(i, j) {
            1.0
        } else {
            0.0
        }
    });
    AssignmentMatrix { spec, g, seed }
}

/// Block-diagonal matrix of `k/s` all-ones `s × s` blocks.
pub fn construct_frc(k: usize, s: usize) -> Result<AssignmentMatrix> {
    Ok(sample(CodeSpec::frc(k, s)?, 0))
}

/// I.i.d. Bernoulli(`p`) entries.
pub fn construct_bgc(k: usize, s: usize, p: f64, seed: u64) -> Result<AssignmentMatrix> {
    Ok(sample(CodeSpec::bgc(k, s, p)?, seed))
}

/// Samples `G` for any spec; entry `(i, j)` is 1 iff its uniform draw is below
/// the entry's probability, so the result depends only on `(spec, seed)`.
pub fn construct_sbc(spec: CodeSpec, seed: u64) -> Result<AssignmentMatrix> {
    spec.validate()?;
    Ok(sample(spec, seed))
}

/// The `q` giving expected column weight `s`: solves `s·p + (k − s)·q = s`.
pub fn matched_q(k: usize, s: usize, p: f64) -> Result<f64> {
    if k <= s {
        return Err(Error::invalid(format!("matched_q needs k > s (k={k}, s={s})")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("p={p} is not a probability")));
    }
    let q = s as f64 * (1.0 - p) / (k - s) as f64;
    Ok(q.clamp(0.0, 1.0))
}

/// `s·p + (k − s)·q`.
pub fn expected_column_weight(spec: &CodeSpec) -> f64 {
    spec.s as f64 * spec.p + (spec.k - spec.s) as f64 * spec.q
}
