//! Adversarial straggler strategies compared on common code realizations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codes::{construct_sbc, CodeSpec};
use crate::decoding::optimal_error;
use crate::error::{Error, Result};
use crate::seeding::{self, stream};
use crate::stragglers::{
    block_attack, bruteforce_attack, greedy_attack, sample_random_nonstragglers,
    spectral_community_attack, PermutedCode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackMethod {
    Random,
    Blocks,
    Greedy,
    Spectral,
    Bruteforce,
}

impl AttackMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttackMethod::Random => "random",
            AttackMethod::Blocks => "blocks",
            AttackMethod::Greedy => "greedy",
            AttackMethod::Spectral => "spectral",
            AttackMethod::Bruteforce => "bruteforce",
        }
    }
}

impl fmt::Display for AttackMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttackMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(AttackMethod::Random),
            "blocks" => Ok(AttackMethod::Blocks),
            "greedy" => Ok(AttackMethod::Greedy),
            "spectral" => Ok(AttackMethod::Spectral),
            "bruteforce" => Ok(AttackMethod::Bruteforce),
            other => Err(Error::invalid(format!("unknown attack method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackRow {
    pub method: AttackMethod,
    pub mean_err: f64,
    pub stddev_err: f64,
    pub min_err: f64,
    pub max_err: f64,
    /// Optimal-decoding error per trial, in trial order.
    pub errs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackReport {
    pub spec: CodeSpec,
    pub r: usize,
    pub trials: usize,
    pub seed: u64,
    pub rows: Vec<AttackRow>,
}

impl AttackReport {
    pub fn row(&self, method: AttackMethod) -> Option<&AttackRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

fn attack_error(method: AttackMethod, spec: &CodeSpec, r: usize, seed: u64) -> Result<f64> {
    let g = construct_sbc(*spec, seeding::derive(seed, stream::MATRIX))?;
    match method {
        AttackMethod::Random => {
            let t = sample_random_nonstragglers(spec.k, r, seeding::derive(seed, stream::STRAGGLERS))?;
            optimal_error(&g.g, t.indices())
        }
        AttackMethod::Blocks => optimal_error(&g.g, block_attack(&spec.partition(), r)?.indices()),
        AttackMethod::Greedy => optimal_error(&g.g, greedy_attack(&g, r)?.indices()),
        AttackMethod::Bruteforce => optimal_error(&g.g, bruteforce_attack(&g, r)?.indices()),
        AttackMethod::Spectral => {
            let pg = PermutedCode::new(&g, seeding::derive(seed, stream::PERMUTATION));
            let t = spectral_community_attack(&pg, r)?;
            optimal_error(&pg.matrix.g, t.indices())
        }
    }
}

/// Runs each method on the same `trials` realizations of `G` and reports
/// optimal-decoding error. The spectral attacker sees a hidden relabeling of
/// the realization; everyone else sees it in block order.
pub fn attack_comparison(
    spec: &CodeSpec,
    r: usize,
    trials: usize,
    seed: u64,
    methods: &[AttackMethod],
) -> Result<AttackReport> {
    spec.validate()?;
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    if r == 0 || r > spec.k {
        return Err(Error::invalid(format!("need 1 <= r <= k, got r={r}, k={}", spec.k)));
    }
    let mut rows = Vec::with_capacity(methods.len());
    for &method in methods {
        let errs = (0..trials)
            .map(|t| attack_error(method, spec, r, seeding::derive(seed, t as u64)))
            .collect::<Result<Vec<f64>>>()?;
        let n = errs.len() as f64;
        let mean_err = errs.iter().sum::<f64>() / n;
        let stddev_err = if errs.len() > 1 {
            (errs.iter().map(|e| (e - mean_err).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        rows.push(AttackRow {
            method,
            mean_err,
            stddev_err,
            min_err: errs.iter().copied().fold(f64::INFINITY, f64::min),
            max_err: errs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            errs,
        });
    }
    Ok(AttackReport {
        spec: *spec,
        r,
        trials,
        seed,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in [
            AttackMethod::Random,
            AttackMethod::Blocks,
            AttackMethod::Greedy,
            AttackMethod::Spectral,
            AttackMethod::Bruteforce,
        ] {
            assert_eq!(m.as_str().parse::<AttackMethod>().unwrap(), m);
        }
        assert!("nope".parse::<AttackMethod>().is_err());
    }

    #[test]
    fn frc_blocks_and_spectral_agree() {
        let spec = CodeSpec::frc(20, 5).unwrap();
        let rep = attack_comparison(
            &spec,
            10,
            3,
            4,
            &[AttackMethod::Blocks, AttackMethod::Spectral, AttackMethod::Greedy],
        )
        .unwrap();
        for row in &rep.rows {
            for &e in &row.errs {
                assert!((e - 10.0).abs() < 1e-9, "{}: {e}", row.method);
            }
        }
    }

    #[test]
    fn bruteforce_dominates_on_small_code() {
        let spec = CodeSpec::sbc(8, 4, 0.8, 0.2).unwrap();
        let methods = [
            AttackMethod::Random,
            AttackMethod::Blocks,
            AttackMethod::Greedy,
            AttackMethod::Spectral,
            AttackMethod::Bruteforce,
        ];
        let rep = attack_comparison(&spec, 5, 4, 11, &methods).unwrap();
        let bf = rep.row(AttackMethod::Bruteforce).unwrap();
        for row in &rep.rows {
            for (e, b) in row.errs.iter().zip(&bf.errs) {
                assert!(e <= &(b + 1e-9), "{} beat bruteforce: {e} > {b}", row.method);
            }
        }
    }
}
