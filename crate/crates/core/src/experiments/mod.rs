//! Seeded Monte Carlo harness.
//!
//! A sweep walks the grid `s × p × ε × decoder`. Trial `t` of every cell with
//! `s = s_values[i]` uses the seed `derive_all(master_seed, [i, t])`, whatever
//! its `p`, `ε` and decoder. Decoders are therefore compared on identical
//! `(G, T)` realizations, neighboring `p` values share their uniforms (entry
//! `(a, b)` of `G` is 1 iff the same draw falls below `p` or `q`), and the
//! non-straggler sets of one trial are nested as `ε` grows. Trials run in parallel but are reduced in
//! trial order, so results do not depend on the thread count.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{governing_bound, BoundReport};
use crate::codes::{construct_sbc, matched_q, BlockLayout, CodeFamily, CodeSpec};
use crate::decoding::{decode, err, DecoderKind};
use crate::error::{Error, Result};
use crate::seeding::{self, stream};
use crate::stragglers::{
    all_blocks_hit, block_attack, sample_random_nonstragglers, StragglerPattern,
};

pub mod attacks;
pub mod gd;
pub mod plot;

pub use attacks::{attack_comparison, AttackMethod, AttackReport};
pub use gd::{run_gd_demo, GdDemoReport};

/// Tolerance for pairwise decoder-dominance checks.
pub const DOMINANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StragglerModel {
    Random,
    BlockAttack,
}

impl StragglerModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            StragglerModel::Random => "RANDOM",
            StragglerModel::BlockAttack => "BLOCK_ATTACK",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum QRule {
    Matched,
    Explicit(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub k: usize,
    pub s_values: Vec<usize>,
    pub p_values: Vec<f64>,
    pub epsilon_values: Vec<f64>,
    pub trials: usize,
    pub decoders: Vec<DecoderKind>,
    pub straggler_model: StragglerModel,
    pub master_seed: u64,
    pub q_rule: QRule,
    #[serde(default)]
    pub layout: BlockLayout,
}

/// `r = round((1 − ε)·k)`, halves rounded up.
pub fn nonstragglers_for(k: usize, epsilon: f64) -> usize {
    ((1.0 - epsilon) * k as f64 + 0.5).floor() as usize
}

/// Normalized error of the uncoded scheme: the straggler fraction itself.
pub fn uncoded_error(epsilon: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::invalid(format!("epsilon={epsilon} outside [0, 1]")));
    }
    Ok(epsilon)
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: SweepConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path == "." {
                Error::invalid(format!("config: {}", e.inner()))
            } else {
                Error::invalid(format!("config field `{path}`: {}", e.inner()))
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::invalid(msg));
        if self.trials == 0 {
            return fail("trials: must be at least 1".into());
        }
        for (name, empty) in [
            ("s_values", self.s_values.is_empty()),
            ("p_values", self.p_values.is_empty()),
            ("epsilon_values", self.epsilon_values.is_empty()),
            ("decoders", self.decoders.is_empty()),
        ] {
            if empty {
                return fail(format!("{name}: must not be empty"));
            }
        }
        for &eps in &self.epsilon_values {
            if !(0.0..1.0).contains(&eps) {
                return fail(format!("epsilon_values: {eps} outside [0, 1)"));
            }
            if nonstragglers_for(self.k, eps) == 0 {
                return fail(format!("epsilon_values: {eps} leaves no non-stragglers"));
            }
        }
        for &s in &self.s_values {
            for &p in &self.p_values {
                self.spec_for(s, p)
                    .map_err(|e| Error::invalid(format!("s_values/p_values: {e}")))?;
            }
        }
        Ok(())
    }

    pub fn q_for(&self, s: usize, p: f64) -> Result<f64> {
        match self.q_rule {
            QRule::Matched => matched_q(self.k, s, p),
            QRule::Explicit(q) => Ok(q),
        }
    }

    pub fn spec_for(&self, s: usize, p: f64) -> Result<CodeSpec> {
        let q = self.q_for(s, p)?;
        CodeSpec::new(self.k, s, p, q, CodeFamily::classify(p, q), self.layout)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub seed: u64,
    pub spec: CodeSpec,
    pub r: usize,
    pub decoder: DecoderKind,
    pub err: f64,
    pub err_over_k: f64,
    pub all_blocks_hit: bool,
}

/// Straggler pattern for one trial under `model`.
pub fn stragglers_for(
    spec: &CodeSpec,
    r: usize,
    model: StragglerModel,
    seed: u64,
) -> Result<StragglerPattern> {
    match model {
        StragglerModel::Random => {
            sample_random_nonstragglers(spec.k, r, seeding::derive(seed, stream::STRAGGLERS))
        }
        StragglerModel::BlockAttack => block_attack(&spec.partition(), r),
    }
}

/// One realization of `(G, T)` decoded by each of `decoders`.
pub fn run_paired_trial(
    spec: &CodeSpec,
    r: usize,
    decoders: &[DecoderKind],
    model: StragglerModel,
    trial_index: usize,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    if r == 0 || r > spec.k {
        return Err(Error::invalid(format!("need 1 <= r <= k, got r={r}")));
    }
    let g = construct_sbc(*spec, seeding::derive(seed, stream::MATRIX))?;
    let t = stragglers_for(spec, r, model, seed)?;
    let hit = all_blocks_hit(&t, &spec.partition());
    let decode_seed = seeding::derive(seed, stream::DECODE);
    decoders
        .iter()
        .map(|&decoder| {
            let v = decode(decoder, &g, &t, decode_seed)?;
            let e = err(&g, &v)?;
            Ok(TrialRecord {
                trial_index,
                seed,
                spec: *spec,
                r,
                decoder,
                err: e,
                err_over_k: e / spec.k as f64,
                all_blocks_hit: hit,
            })
        })
        .collect()
}

/// A single trial with random stragglers.
pub fn run_trial(spec: &CodeSpec, r: usize, decoder: DecoderKind, seed: u64) -> Result<TrialRecord> {
    let mut recs = run_paired_trial(spec, r, &[decoder], StragglerModel::Random, 0, seed)?;
    Ok(recs.remove(0))
}

/// Aggregates for one `(s, p, ε, decoder)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub family: CodeFamily,
    pub k: usize,
    pub s: usize,
    pub p: f64,
    pub q: f64,
    pub epsilon: f64,
    pub r: usize,
    pub decoder: DecoderKind,
    pub straggler_model: StragglerModel,
    pub trials: usize,
    pub mean_err: f64,
    pub mean_err_over_k: f64,
    pub stddev_err: f64,
    pub bound: Option<BoundReport>,
    pub violation_fraction: Option<f64>,
    pub uncoded: f64,
    pub master_seed: u64,
    /// Fraction of trials in which some block lost every node.
    pub empty_block_fraction: f64,
    /// Largest error among trials where every block kept a node.
    pub max_err_all_hit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub cells: Vec<CellSummary>,
    /// Trials where the optimal decoder did worse than another decoder on the
    /// same realization (beyond [`DOMINANCE_TOL`]). Always 0 unless broken.
    pub dominance_violations: usize,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn with_cell_context(e: Error, cell: &str) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("cell {cell}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("cell {cell}: {m}")),
        Error::ResourceLimit(m) => Error::ResourceLimit(format!("cell {cell}: {m}")),
        other => other,
    }
}

/// Thread count from `SBCODE_THREADS` (unset or 0 means automatic).
pub fn threads_from_env() -> usize {
    std::env::var("SBCODE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

/// Runs every cell of `cfg` on a pool of `threads` workers (0 = automatic).
pub fn run_sweep(cfg: &SweepConfig, threads: usize) -> Result<SweepResult> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| sweep_inner(cfg))
}

fn sweep_inner(cfg: &SweepConfig) -> Result<SweepResult> {
    let mut cells = Vec::new();
    let mut dominance_violations = 0;
    let opt_pos = cfg.decoders.iter().position(|&d| d == DecoderKind::Optimal);

    for (si, &s) in cfg.s_values.iter().enumerate() {
        for &p in &cfg.p_values {
            let spec = cfg.spec_for(s, p)?;
            for &eps in &cfg.epsilon_values {
                let r = nonstragglers_for(cfg.k, eps);
                let label = format!("(s={s}, p={p}, epsilon={eps})");
                let per_trial: Vec<Vec<TrialRecord>> = (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| {
                        let seed = seeding::derive_all(cfg.master_seed, &[si as u64, t as u64]);
                        run_paired_trial(&spec, r, &cfg.decoders, cfg.straggler_model, t, seed)
                    })
                    .collect::<Result<_>>()
                    .map_err(|e| with_cell_context(e, &label))?;

                if let Some(op) = opt_pos {
                    dominance_violations += per_trial
                        .iter()
                        .filter(|recs| recs.iter().any(|x| recs[op].err > x.err + DOMINANCE_TOL))
                        .count();
                }

                let bound = match cfg.straggler_model {
                    StragglerModel::Random => governing_bound(cfg.k, s, r, p, spec.q)
                        .map_err(|e| with_cell_context(e, &label))?,
                    StragglerModel::BlockAttack => None,
                };
                let empty_block_fraction = per_trial
                    .iter()
                    .filter(|recs| !recs[0].all_blocks_hit)
                    .count() as f64
                    / cfg.trials as f64;

                for (di, &decoder) in cfg.decoders.iter().enumerate() {
                    let errs: Vec<f64> = per_trial.iter().map(|recs| recs[di].err).collect();
                    let (mean_err, stddev_err) = mean_std(&errs);
                    // bounds cover stochastic block decoding, and optimal decoding by dominance
                    let cell_bound = bound.clone().filter(|_| {
                        matches!(decoder, DecoderKind::StochasticBlock | DecoderKind::Optimal)
                    });
                    let violation_fraction = cell_bound.as_ref().map(|b| {
                        errs.iter().filter(|&&e| e > b.value).count() as f64 / cfg.trials as f64
                    });
                    let max_err_all_hit = per_trial
                        .iter()
                        .filter(|recs| recs[di].all_blocks_hit)
                        .map(|recs| recs[di].err)
                        .reduce(f64::max);
                    cells.push(CellSummary {
                        family: spec.family,
                        k: cfg.k,
                        s,
                        p,
                        q: spec.q,
                        epsilon: eps,
                        r,
                        decoder,
                        straggler_model: cfg.straggler_model,
                        trials: cfg.trials,
                        mean_err,
                        mean_err_over_k: mean_err / cfg.k as f64,
                        stddev_err,
                        bound: cell_bound,
                        violation_fraction,
                        uncoded: uncoded_error(eps)?,
                        master_seed: cfg.master_seed,
                        empty_block_fraction,
                        max_err_all_hit,
                    });
                }
            }
        }
    }
    Ok(SweepResult {
        config: cfg.clone(),
        cells,
        dominance_violations,
    })
}

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub family: String,
    pub k: usize,
    pub s: usize,
    pub p: f64,
    pub q: f64,
    pub epsilon: f64,
    pub r: usize,
    pub decoder: String,
    pub straggler_model: String,
    pub trials: usize,
    pub mean_err: f64,
    pub mean_err_over_k: f64,
    pub stddev_err: f64,
    pub bound_value: Option<f64>,
    pub bound_applicable: bool,
    pub violation_fraction: Option<f64>,
    pub uncoded: f64,
    pub master_seed: u64,
}

pub const CSV_COLUMNS: [&str; 18] = [
    "family",
    "k",
    "s",
    "p",
    "q",
    "epsilon",
    "r",
    "decoder",
    "straggler_model",
    "trials",
    "mean_err",
    "mean_err_over_k",
    "stddev_err",
    "bound_value",
    "bound_applicable",
    "violation_fraction",
    "uncoded",
    "master_seed",
];

impl From<&CellSummary> for CsvRow {
    fn from(c: &CellSummary) -> Self {
        CsvRow {
            family: c.family.to_string(),
            k: c.k,
            s: c.s,
            p: c.p,
            q: c.q,
            epsilon: c.epsilon,
            r: c.r,
            decoder: c.decoder.to_string(),
            straggler_model: c.straggler_model.as_str().to_string(),
            trials: c.trials,
            mean_err: c.mean_err,
            mean_err_over_k: c.mean_err_over_k,
            stddev_err: c.stddev_err,
            bound_value: c.bound.as_ref().map(|b| b.value),
            bound_applicable: c.bound.as_ref().is_some_and(BoundReport::applicable),
            violation_fraction: c.violation_fraction,
            uncoded: c.uncoded,
            master_seed: c.master_seed,
        }
    }
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for cell in &self.cells {
            w.serialize(CsvRow::from(cell))?;
        }
        if self.cells.is_empty() {
            w.write_record(CSV_COLUMNS)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// Reads a results CSV, checking the header first.
pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let missing: Vec<&str> = CSV_COLUMNS
        .iter()
        .copied()
        .filter(|c| !headers.iter().any(|h| h == *c))
        .collect();
    if !missing.is_empty() {
        return Err(Error::invalid(format!("results CSV is missing columns: {}", missing.join(", "))));
    }
    let rows = rdr.deserialize().collect::<std::result::Result<Vec<CsvRow>, _>>()?;
    Ok(rows)
}

/// Outcome of checking one cell against its governing bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub s: usize,
    pub p: f64,
    pub q: f64,
    pub epsilon: f64,
    pub r: usize,
    pub bound: BoundReport,
    pub applicable: bool,
    pub trials: usize,
    pub violation_fraction: f64,
    /// `failure_prob + 2·√(failure_prob / trials)`.
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundValidation {
    pub checks: Vec<BoundCheck>,
    pub warnings: Vec<String>,
}

impl BoundValidation {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Empirical violation rate of each stochastic-block cell's bound against the
/// bound's failure probability plus two binomial standard errors.
pub fn validate_bounds(cfg: &SweepConfig, threads: usize) -> Result<BoundValidation> {
    let mut cfg = cfg.clone();
    cfg.decoders = vec![DecoderKind::StochasticBlock];
    cfg.straggler_model = StragglerModel::Random;
    let result = run_sweep(&cfg, threads)?;
    let mut checks = Vec::new();
    let mut warnings = Vec::new();
    for cell in &result.cells {
        let (Some(bound), Some(vf)) = (&cell.bound, cell.violation_fraction) else {
            continue;
        };
        let fp = bound.failure_prob();
        let threshold = fp + 2.0 * (fp / cell.trials as f64).sqrt();
        let applicable = bound.applicable();
        if !applicable {
            let failed: Vec<&str> = bound
                .preconditions
                .iter()
                .filter(|(_, &ok)| !ok)
                .map(|(n, _)| *n)
                .collect();
            warnings.push(format!(
                "s={}, p={}, epsilon={}: {} hypotheses not met ({})",
                cell.s,
                cell.p,
                cell.epsilon,
                bound.name,
                failed.join(", ")
            ));
        }
        checks.push(BoundCheck {
            s: cell.s,
            p: cell.p,
            q: cell.q,
            epsilon: cell.epsilon,
            r: cell.r,
            bound: bound.clone(),
            applicable,
            trials: cell.trials,
            violation_fraction: vf,
            threshold,
            pass: vf <= threshold,
        });
    }
    if checks.is_empty() {
        warnings.push("no cell has a bound to validate".into());
    }
    Ok(BoundValidation { checks, warnings })
}
