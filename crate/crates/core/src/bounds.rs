//! Closed-form error bounds and recovery thresholds for stochastic block codes.
//!
//! Every bound is evaluated even when its hypotheses fail; the report carries
//! one flag per hypothesis and is only applicable when all of them hold.
//! Logarithms are natural throughout.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::codes::CodeSpec;
use crate::decoding::beta_of;
use crate::error::{Error, Result};
use crate::numerics::log_binomial;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: &'static str,
    /// Upper bound on `err(v)`.
    pub value: f64,
    /// Probability with which the bound holds when applicable.
    pub prob: f64,
    pub preconditions: BTreeMap<&'static str, bool>,
    pub notes: String,
}

impl BoundReport {
    pub fn applicable(&self) -> bool {
        self.preconditions.values().all(|&ok| ok)
    }

    /// Probability that the bound fails when applicable.
    pub fn failure_prob(&self) -> f64 {
        1.0 - self.prob
    }
}

fn lnk(k: usize) -> f64 {
    (k as f64).ln()
}

fn s_condition(k: usize, s: usize, r: usize) -> bool {
    s as f64 >= 2.0 * lnk(k) * k as f64 / r as f64
}

fn check_kr(k: usize, r: usize) -> Result<()> {
    if k < 2 || r == 0 || r > k {
        return Err(Error::invalid(format!("need k >= 2 and 1 <= r <= k (k={k}, r={r})")));
    }
    Ok(())
}

fn check_prob(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid(format!("{name}={x} is not a probability")));
    }
    Ok(())
}

/// Union-bound lower bound on `P(every block keeps a survivor)` for a
/// uniformly random `r`-subset: `1 − (k/s)·C(k−s, r)/C(k, r)`, floored at 0.
pub fn lemma1_nonempty_prob_bound(k: usize, s: usize, r: usize) -> Result<f64> {
    if s == 0 || !k.is_multiple_of(s) || r == 0 || r > k {
        return Err(Error::invalid(format!(
            "need s | k and 0 < r <= k (k={k}, s={s}, r={r})"
        )));
    }
    if r > k - s {
        return Ok(1.0);
    }
    let ratio = (log_binomial((k - s) as u64, r as u64)? - log_binomial(k as u64, r as u64)?).exp();
    Ok((1.0 - (k / s) as f64 * ratio).max(0.0))
}

/// The same bound with `C(k−s, r)/C(k, r)` relaxed to `(1 − s/k)^r`.
pub fn lemma1_relaxed_bound(k: usize, s: usize, r: usize) -> Result<f64> {
    if s == 0 || !k.is_multiple_of(s) || r == 0 || r > k {
        return Err(Error::invalid(format!(
            "need s | k and 0 < r <= k (k={k}, s={s}, r={r})"
        )));
    }
    let ratio = (1.0 - s as f64 / k as f64).powi(r as i32);
    Ok((1.0 - (k / s) as f64 * ratio).max(0.0))
}

/// `s ≥ 2·ln(k)·k/r`, under which every block is hit with probability ≥ 1 − 1/k.
pub fn lemma2_condition(k: usize, s: usize, r: usize) -> bool {
    k >= 2 && r > 0 && s_condition(k, s, r)
}

/// Error bound for `q = γ/k` with `γ < s` and `p` within `k⁻²` of 1:
/// `14·√(ln(k)·γ/s)·max{k((1−p) + γ/s), 3·ln(k)}` with probability `1 − 4/k`.
pub fn theorem1_bound(k: usize, s: usize, r: usize, p: f64, gamma: f64) -> Result<BoundReport> {
    check_kr(k, r)?;
    check_prob("p", p)?;
    if s == 0 || gamma.is_nan() || gamma < 0.0 {
        return Err(Error::invalid(format!("need s > 0 and gamma >= 0 (s={s}, gamma={gamma})")));
    }
    let (kf, sf, l) = (k as f64, s as f64, lnk(k));
    let value = 14.0 * (l * gamma / sf).sqrt() * (kf * ((1.0 - p) + gamma / sf)).max(3.0 * l);
    let preconditions = BTreeMap::from([
        ("gamma_lt_s", gamma < sf),
        ("one_minus_p_le_inv_k_sq", 1.0 - p <= 1.0 / (kf * kf)),
        ("s_ge_2lnk_k_over_r", s_condition(k, s, r)),
    ]);
    Ok(BoundReport {
        name: "theorem1",
        value,
        prob: 1.0 - 4.0 / kf,
        preconditions,
        notes: format!("stochastic block decoding, q = gamma/k = {}", gamma / kf),
    })
}

/// `s ≥ 2 ln(k) k/r` and `γ ≤ 3 ln(k) s/k`: the max-term of the first bound
/// is then `3 ln k`, giving `err = O(ln²k/√k)`.
pub fn corollary1_applicable(k: usize, s: usize, r: usize, gamma: f64) -> bool {
    lemma2_condition(k, s, r) && gamma <= 3.0 * lnk(k) * s as f64 / k as f64
}

fn variance_term(k: usize, s: usize, p: f64, q: f64) -> f64 {
    (1.0 - p) * p + (k as f64 / s as f64 - 1.0) * (1.0 - q) * q
}

fn dense_q_preconditions(k: usize, s: usize, r: usize, q: f64) -> BTreeMap<&'static str, bool> {
    BTreeMap::from([
        ("s_ge_2lnk_k_over_r", s_condition(k, s, r)),
        (
            "cross_block_variance_ge_lnk",
            (k as f64 / s as f64 - 1.0) * (1.0 - q) * q >= lnk(k),
        ),
    ])
}

/// `(16 ln(k) s²/(k q²))·((1−p)p + (k/s − 1)(1−q)q)` with probability `1 − 2/k`.
pub fn theorem2_bound(k: usize, s: usize, r: usize, p: f64, q: f64) -> Result<BoundReport> {
    check_kr(k, r)?;
    check_prob("p", p)?;
    check_prob("q", q)?;
    if q == 0.0 {
        return Err(Error::invalid("theorem2 bound needs q > 0"));
    }
    if s == 0 {
        return Err(Error::invalid("s must be positive"));
    }
    let (kf, sf) = (k as f64, s as f64);
    let value = 16.0 * lnk(k) * sf * sf / (kf * q * q) * variance_term(k, s, p, q);
    Ok(BoundReport {
        name: "theorem2",
        value,
        prob: 1.0 - 2.0 / kf,
        preconditions: dense_q_preconditions(k, s, r, q),
        notes: "stochastic block decoding, beta replaced by its lower bound kq/s".into(),
    })
}

/// `(16 k ln(k)/β²)·((1−p)p + (k/s − 1)(1−q)q)` with the decoder's actual `β`.
pub fn theorem_ref_bound(k: usize, s: usize, r: usize, p: f64, q: f64) -> Result<BoundReport> {
    check_kr(k, r)?;
    check_prob("p", p)?;
    check_prob("q", q)?;
    if s == 0 || s > k {
        return Err(Error::invalid(format!("need 0 < s <= k (s={s})")));
    }
    // beta_of only reads k, s, p, q
    let beta = beta_of(&CodeSpec {
        k,
        s,
        p,
        q,
        family: crate::codes::CodeFamily::classify(p, q),
        layout: crate::codes::BlockLayout::Truncated,
    });
    let kf = k as f64;
    let value = 16.0 * kf * lnk(k) / (beta * beta) * variance_term(k, s, p, q);
    Ok(BoundReport {
        name: "theorem_ref",
        value,
        prob: 1.0 - 2.0 / kf,
        preconditions: dense_q_preconditions(k, s, r, q),
        notes: format!("stochastic block decoding with beta = {beta}"),
    })
}

/// Bernoulli code (`p = q`) under stochastic block decoding:
/// `16·ln(k)·s·(1−p)/p` with probability `1 − 2/k`.
pub fn corollary2_bound(k: usize, s: usize, r: usize, p: f64) -> Result<BoundReport> {
    check_kr(k, r)?;
    check_prob("p", p)?;
    if p == 0.0 {
        return Err(Error::invalid("corollary2 bound needs p > 0"));
    }
    let (kf, sf) = (k as f64, s as f64);
    let value = 16.0 * lnk(k) * sf * (1.0 - p) / p;
    let preconditions = BTreeMap::from([
        ("s_ge_2lnk_k_over_r", s_condition(k, s, r)),
        ("p_ge_s_lnk_over_k", p >= sf * lnk(k) / kf),
    ]);
    Ok(BoundReport {
        name: "corollary2",
        value,
        prob: 1.0 - 2.0 / kf,
        preconditions,
        notes: "Bernoulli gradient code under stochastic block decoding".into(),
    })
}

/// High-probability bound `7·√(ln(k)·γ/s)` on `‖G·v − 1‖_∞`, given every block is hit.
pub fn lemma3_linf_bound(k: usize, s: usize, gamma: f64) -> Result<f64> {
    if s == 0 || gamma.is_nan() || gamma < 0.0 || gamma >= s as f64 {
        return Err(Error::invalid(format!("need 0 <= gamma < s (gamma={gamma}, s={s})")));
    }
    Ok(7.0 * (lnk(k) * gamma / s as f64).sqrt())
}

/// `(a − b)² / (m·(a + (m − 1)·b))` for an `m`-community model with
/// `p = a/k`, `q = b/k`.
pub fn snr(a: f64, b: f64, m: usize) -> Result<f64> {
    let denom = m as f64 * (a + (m as f64 - 1.0) * b);
    if m < 2 || denom.is_nan() || denom <= 0.0 || !denom.is_finite() {
        return Err(Error::invalid(format!(
            "snr needs m >= 2 and a + (m-1)b > 0 (a={a}, b={b}, m={m})"
        )));
    }
    Ok((a - b) * (a - b) / denom)
}

/// `√p − √q < √(ln(k)/s)`: no algorithm recovers the blocks exactly.
pub fn exact_recovery_impossible(k: usize, s: usize, p: f64, q: f64) -> bool {
    p.sqrt() - q.sqrt() < (lnk(k) / s as f64).sqrt()
}

/// `k(p − q)² > 2(p + q)`: better-than-random recovery of two blocks of `k/2`.
pub fn weak_recovery_possible_two_communities(k: usize, p: f64, q: f64) -> bool {
    k as f64 * (p - q) * (p - q) > 2.0 * (p + q)
}

/// Every error bound that can be evaluated at `(k, s, r, p, q)`.
pub fn all_reports(k: usize, s: usize, r: usize, p: f64, q: f64) -> Result<Vec<BoundReport>> {
    check_kr(k, r)?;
    check_prob("p", p)?;
    check_prob("q", q)?;
    if s == 0 || s > k {
        return Err(Error::invalid(format!("need 0 < s <= k (s={s}, k={k})")));
    }
    let gamma = q * k as f64;
    let mut out = vec![theorem1_bound(k, s, r, p, gamma)?];
    if q > 0.0 {
        out.push(theorem2_bound(k, s, r, p, q)?);
    }
    out.push(theorem_ref_bound(k, s, r, p, q)?);
    if p > 0.0 {
        let mut c2 = corollary2_bound(k, s, r, p)?;
        c2.preconditions.insert("p_eq_q", p == q);
        out.push(c2);
    }
    Ok(out)
}

/// The bound the experiment harness checks stochastic block decoding against:
/// the Bernoulli-code bound when `p = q`, the sparse-`q` bound when `qk < s`,
/// the dense-`q` bound otherwise.
pub fn governing_bound(k: usize, s: usize, r: usize, p: f64, q: f64) -> Result<Option<BoundReport>> {
    let gamma = q * k as f64;
    if p == q {
        if p == 0.0 {
            return Ok(None);
        }
        corollary2_bound(k, s, r, p).map(Some)
    } else if gamma < s as f64 {
        theorem1_bound(k, s, r, p, gamma).map(Some)
    } else {
        theorem2_bound(k, s, r, p, q).map(Some)
    }
}
