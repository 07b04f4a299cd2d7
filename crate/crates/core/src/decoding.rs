//! Decoders, the error functional `err(v) = ‖G·v − 1‖²`, and reconstruction.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::codes::{AssignmentMatrix, CodeSpec};
use crate::error::{Error, Result};
use crate::numerics::{mask_columns, norm_sq, solve_min_norm_least_squares, Matrix, DEFAULT_SV_TOL};
use crate::seeding;
use crate::stragglers::{intersect_blocks, StragglerPattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DecoderKind {
    StochasticBlock,
    AveragedBlock,
    BgcUniform,
    Optimal,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 4] = [
        DecoderKind::StochasticBlock,
        DecoderKind::AveragedBlock,
        DecoderKind::BgcUniform,
        DecoderKind::Optimal,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DecoderKind::StochasticBlock => "STOCHASTIC_BLOCK",
            DecoderKind::AveragedBlock => "AVERAGED_BLOCK",
            DecoderKind::BgcUniform => "BGC_UNIFORM",
            DecoderKind::Optimal => "OPTIMAL",
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        DecoderKind::ALL
            .into_iter()
            .find(|d| d.as_str() == norm)
            .ok_or_else(|| Error::invalid(format!("unknown decoder {s:?}")))
    }
}

/// A decoding vector `v` supported on the non-straggler set.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodingVector {
    pub v: Vec<f64>,
    pub support: Vec<usize>,
    pub decoder: DecoderKind,
    pub beta: f64,
}

impl DecodingVector {
    fn from_dense(v: Vec<f64>, decoder: DecoderKind, beta: f64) -> Self {
        let support = v
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(i, _)| i)
            .collect();
        DecodingVector {
            v,
            support,
            decoder,
            beta,
        }
    }

    pub fn zeros(k: usize, decoder: DecoderKind) -> Self {
        Self::from_dense(vec![0.0; k], decoder, 1.0)
    }

    pub fn nonzeros(&self) -> usize {
        self.support.len()
    }
}

/// Serialized as `{decoder, beta, entries: [[index, value], …]}`.
impl Serialize for DecodingVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<(usize, f64)> = self.support.iter().map(|&i| (i, self.v[i])).collect();
        let mut st = serializer.serialize_struct("DecodingVector", 3)?;
        st.serialize_field("decoder", &self.decoder)?;
        st.serialize_field("beta", &self.beta)?;
        st.serialize_field("entries", &entries)?;
        st.end()
    }
}

/// Scaling constant of stochastic block decoding: `p + (k/s − 1)·q` when that
/// is at least 2, otherwise 1. Uses the model's `(p, q)`, not the realization.
pub fn beta_of(spec: &CodeSpec) -> f64 {
    let expected = spec.p + (spec.k as f64 / spec.s as f64 - 1.0) * spec.q;
    if expected < 2.0 {
        1.0
    } else {
        expected
    }
}

fn check_k(g: &AssignmentMatrix, t: &StragglerPattern) -> Result<()> {
    if g.k() != t.k() {
        return Err(Error::invalid(format!(
            "matrix has k={} but straggler pattern has k={}",
            g.k(),
            t.k()
        )));
    }
    Ok(())
}

/// One uniformly chosen survivor per nonempty block, each weighted `1/β`.
pub fn stochastic_block_decode(
    g: &AssignmentMatrix,
    t: &StragglerPattern,
    seed: u64,
) -> Result<DecodingVector> {
    check_k(g, t)?;
    let beta = beta_of(&g.spec);
    let mut rng = seeding::rng(seed);
    let mut v = vec![0.0; g.k()];
    for block in intersect_blocks(t, &g.spec.partition())? {
        if block.is_empty() {
            continue;
        }
        let pick = block[rng.random_range(0..block.len())];
        v[pick] = 1.0 / beta;
    }
    Ok(DecodingVector::from_dense(v, DecoderKind::StochasticBlock, beta))
}

/// Every survivor in block `i` gets `1/(β·|T_i|)`.
pub fn averaged_block_decode(g: &AssignmentMatrix, t: &StragglerPattern) -> Result<DecodingVector> {
    check_k(g, t)?;
    let beta = beta_of(&g.spec);
    let mut v = vec![0.0; g.k()];
    for block in intersect_blocks(t, &g.spec.partition())? {
        let w = 1.0 / (beta * block.len() as f64);
        for i in block {
            v[i] = w;
        }
    }
    Ok(DecodingVector::from_dense(v, DecoderKind::AveragedBlock, beta))
}

/// `v_i = k/(r·s)` on `T`.
pub fn bgc_uniform_decode(t: &StragglerPattern, k: usize, s: usize) -> Result<DecodingVector> {
    if t.k() != k {
        return Err(Error::invalid(format!("pattern has k={} but k={k}", t.k())));
    }
    if s == 0 {
        return Err(Error::invalid("s must be positive"));
    }
    let w = k as f64 / (t.r() * s) as f64;
    let mut v = vec![0.0; k];
    for &i in t.indices() {
        v[i] = w;
    }
    Ok(DecodingVector::from_dense(v, DecoderKind::BgcUniform, 1.0))
}

/// `v_opt = G_T⁺ · 1`, the minimum-norm least-squares decoder.
pub fn optimal_decode(g: &AssignmentMatrix, t: &StragglerPattern) -> Result<DecodingVector> {
    check_k(g, t)?;
    let v = optimal_vector(&g.g, t.indices())?;
    Ok(DecodingVector::from_dense(v, DecoderKind::Optimal, 1.0))
}

fn optimal_vector(g: &Matrix, keep: &[usize]) -> Result<Vec<f64>> {
    let masked = mask_columns(g, keep)?;
    solve_min_norm_least_squares(&masked, &vec![1.0; g.rows()], DEFAULT_SV_TOL)
}

/// `err(v_opt)` for non-straggler indices `keep`.
pub fn optimal_error(g: &Matrix, keep: &[usize]) -> Result<f64> {
    let v = optimal_vector(g, keep)?;
    err_of(g, &v)
}

/// `‖g·v − 1‖²` for a raw vector.
pub fn err_of(g: &Matrix, v: &[f64]) -> Result<f64> {
    let gv = g.mul_vec(v)?;
    Ok(gv.iter().map(|x| (x - 1.0) * (x - 1.0)).sum())
}

/// `err(v) = ‖G·v − 1_k‖²`.
pub fn err(g: &AssignmentMatrix, v: &DecodingVector) -> Result<f64> {
    err_of(&g.g, &v.v)
}

pub fn decode(
    kind: DecoderKind,
    g: &AssignmentMatrix,
    t: &StragglerPattern,
    seed: u64,
) -> Result<DecodingVector> {
    match kind {
        DecoderKind::StochasticBlock => stochastic_block_decode(g, t, seed),
        DecoderKind::AveragedBlock => averaged_block_decode(g, t),
        DecoderKind::BgcUniform => bgc_uniform_decode(t, g.k(), g.spec.s),
        DecoderKind::Optimal => optimal_decode(g, t),
    }
}

/// Node outputs `y_j = Σ_{i ∈ supp(g_j)} f_i` for function values `f` (`k × w`).
pub fn node_outputs(g: &AssignmentMatrix, f: &Matrix) -> Result<Matrix> {
    g.g.tr_mul(f)
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionResult {
    pub f_hat: Vec<f64>,
    pub f_true: Vec<f64>,
    pub sq_error: f64,
    pub err_v: f64,
}

/// `f̂ = yᵀ·v` from node outputs (`k × w`), compared against `f_true`.
pub fn reconstruct(
    g: &AssignmentMatrix,
    node_outputs: &Matrix,
    v: &DecodingVector,
    f_true: &[f64],
) -> Result<ReconstructionResult> {
    if node_outputs.rows() != v.v.len() {
        return Err(Error::invalid(format!(
            "{} node outputs but decoding vector has length {}",
            node_outputs.rows(),
            v.v.len()
        )));
    }
    if node_outputs.cols() != f_true.len() {
        return Err(Error::invalid(format!(
            "outputs have width {} but f_true has length {}",
            node_outputs.cols(),
            f_true.len()
        )));
    }
    let f_hat = node_outputs.tr_mul_vec(&v.v)?;
    let diff: Vec<f64> = f_hat.iter().zip(f_true).map(|(a, b)| a - b).collect();
    Ok(ReconstructionResult {
        sq_error: norm_sq(&diff),
        err_v: err(g, v)?,
        f_hat,
        f_true: f_true.to_vec(),
    })
}
