//! Acceptance criteria 1–9. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use itertools::Itertools;
use sbcode::codes::{construct_frc, construct_sbc, BlockLayout, CodeSpec};
use sbcode::decoding::{err, optimal_decode, optimal_error, DecoderKind};
use sbcode::experiments::{run_sweep, validate_bounds, QRule, StragglerModel, SweepConfig};
use sbcode::numerics::{norm, solve_min_norm_least_squares, DEFAULT_SV_TOL};
use sbcode::seeding;
use sbcode::stragglers::{
    all_blocks_hit, bruteforce_attack, frc_block_attack, greedy_attack, spectral_community_attack,
    BlockPartition, PermutedCode, StragglerPattern,
};

type Outcome = Result<String, String>;

fn sweep_config(k: usize, s: usize, p: Vec<f64>, eps: Vec<f64>, trials: usize, q: QRule) -> SweepConfig {
    SweepConfig {
        k,
        s_values: vec![s],
        p_values: p,
        epsilon_values: eps,
        trials,
        decoders: vec![DecoderKind::StochasticBlock],
        straggler_model: StragglerModel::Random,
        master_seed: 2024,
        q_rule: q,
        layout: BlockLayout::Exact,
    }
}

fn frc_exactness() -> Outcome {
    let mut cfg = sweep_config(100, 12, vec![1.0], vec![0.2], 500, QRule::Matched);
    cfg.layout = BlockLayout::Truncated;
    let res = run_sweep(&cfg, 0).map_err(|e| e.to_string())?;
    let cell = &res.cells[0];
    let max_hit = cell.max_err_all_hit.unwrap_or(0.0);
    let detail = format!(
        "r={}, max err over all-hit trials = {max_hit}, empty-block fraction = {}",
        cell.r, cell.empty_block_fraction
    );
    if max_hit == 0.0 && cell.empty_block_fraction <= 0.02 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn block_attack_worst_case() -> Outcome {
    let g = construct_frc(100, 5).map_err(|e| e.to_string())?;
    let partition = BlockPartition::new(100, 5).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for r in [80, 90] {
        let t = frc_block_attack(&partition, r).map_err(|e| e.to_string())?;
        let v = optimal_decode(&g, &t).map_err(|e| e.to_string())?;
        let e = err(&g, &v).map_err(|e| e.to_string())?;
        parts.push(format!("r={r}: err={e:.9}"));
        if (e - (100 - r) as f64).abs() > 1e-6 {
            return Err(parts.join(", "));
        }
    }
    Ok(parts.join(", "))
}

fn bound_validation(cfg: SweepConfig) -> Outcome {
    let v = validate_bounds(&cfg, 0).map_err(|e| e.to_string())?;
    let c = v.checks.first().ok_or("no cell with a bound")?;
    let detail = format!(
        "{} = {:.3}, applicable={}, violation fraction {:.4} vs threshold {:.4} over {} trials",
        c.bound.name, c.bound.value, c.applicable, c.violation_fraction, c.threshold, c.trials
    );
    if v.all_pass() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn theorem1_validation() -> Outcome {
    let mut cfg = sweep_config(100, 12, vec![1.0 - 1e-5], vec![0.0], 2000, QRule::Explicit(0.01));
    cfg.layout = BlockLayout::Truncated;
    bound_validation(cfg)
}

fn corollary2_validation() -> Outcome {
    bound_validation(sweep_config(100, 10, vec![0.6], vec![0.2], 2000, QRule::Explicit(0.6)))
}

fn figure_shape() -> Outcome {
    let mut cfg = sweep_config(
        100,
        10,
        vec![0.85, 0.9, 0.95, 0.99, 1.0],
        (1..=10).map(|i| i as f64 * 0.05).collect(),
        500,
        QRule::Matched,
    );
    cfg.decoders = vec![DecoderKind::StochasticBlock, DecoderKind::Optimal];
    let res = run_sweep(&cfg, 0).map_err(|e| e.to_string())?;
    let mut problems = Vec::new();

    for c in res.cells.iter().filter(|c| c.decoder == DecoderKind::Optimal) {
        if c.p >= 0.9 && c.epsilon <= 0.3 + 1e-12 && c.mean_err_over_k >= c.epsilon {
            problems.push(format!("(a) p={} eps={}: {} >= eps", c.p, c.epsilon, c.mean_err_over_k));
        }
    }
    for &eps in &cfg.epsilon_values {
        let means: Vec<f64> = cfg
            .p_values
            .iter()
            .map(|&p| {
                res.cells
                    .iter()
                    .find(|c| c.decoder == DecoderKind::StochasticBlock && c.p == p && c.epsilon == eps)
                    .expect("cell")
                    .mean_err
            })
            .collect();
        if means.windows(2).any(|w| w[1] > w[0]) {
            problems.push(format!("(b) eps={eps}: means not nonincreasing in p: {means:?}"));
        }
    }
    for (opt, sto) in res
        .cells
        .iter()
        .filter(|c| c.decoder == DecoderKind::Optimal)
        .zip(res.cells.iter().filter(|c| c.decoder == DecoderKind::StochasticBlock))
    {
        if opt.mean_err > sto.mean_err + 1e-9 {
            problems.push(format!("(c) p={} eps={}: optimal mean above stochastic", opt.p, opt.epsilon));
        }
    }
    if res.dominance_violations > 0 {
        problems.push(format!("(c) {} paired trials with optimal worse", res.dominance_violations));
    }
    if problems.is_empty() {
        Ok(format!("{} cells checked, no paired dominance violations", res.cells.len()))
    } else {
        Err(problems.join("; "))
    }
}

fn lemma1_oracle() -> Outcome {
    let mut cases = 0;
    for k in 1..=10usize {
        for s in (1..=k).filter(|s| k % s == 0) {
            let partition = BlockPartition::new(k, s).map_err(|e| e.to_string())?;
            for r in 1..=k {
                let (mut hit, mut total) = (0u64, 0u64);
                for t in (0..k).combinations(r) {
                    let t = StragglerPattern::new(k, t).map_err(|e| e.to_string())?;
                    total += 1;
                    hit += all_blocks_hit(&t, &partition) as u64;
                }
                let exact = hit as f64 / total as f64;
                let bound = sbcode::bounds::lemma1_nonempty_prob_bound(k, s, r).map_err(|e| e.to_string())?;
                if exact < bound - 1e-12 {
                    return Err(format!("k={k} s={s} r={r}: exact {exact} < bound {bound}"));
                }
                cases += 1;
            }
        }
    }
    let b = sbcode::bounds::lemma1_nonempty_prob_bound(4, 2, 2).map_err(|e| e.to_string())?;
    if (b - 2.0 / 3.0).abs() > 1e-12 {
        return Err(format!("(4,2,2) bound = {b}, expected 2/3"));
    }
    Ok(format!("{cases} (k, s, r) triples enumerated; (4,2,2) bound = exact = 2/3"))
}

fn attack_oracle() -> Outcome {
    let mut worst_gap = f64::NEG_INFINITY;
    for inst in 0..20u64 {
        let (k, s) = [(6, 2), (6, 3), (8, 2), (8, 4)][(inst % 4) as usize];
        let p = 0.6 + 0.1 * (inst % 4) as f64;
        let q = 0.05 * (inst % 3) as f64;
        let spec = CodeSpec::sbc(k, s, p, q).map_err(|e| e.to_string())?;
        let g = construct_sbc(spec, seeding::derive(inst, 1)).map_err(|e| e.to_string())?;
        let pg = PermutedCode::new(&g, seeding::derive(inst, 2));
        let r = k - s - (inst as usize % 2);
        let bf = bruteforce_attack(&pg.matrix, r).map_err(|e| e.to_string())?;
        let bf_err = optimal_error(&pg.matrix.g, bf.indices()).map_err(|e| e.to_string())?;
        let gr = greedy_attack(&pg.matrix, r).map_err(|e| e.to_string())?;
        let gr_err = optimal_error(&pg.matrix.g, gr.indices()).map_err(|e| e.to_string())?;
        let sp = spectral_community_attack(&pg, r).map_err(|e| e.to_string())?;
        let sp_err = optimal_error(&pg.matrix.g, sp.indices()).map_err(|e| e.to_string())?;
        worst_gap = worst_gap.max(gr_err - bf_err).max(sp_err - bf_err);
        if gr_err > bf_err + 1e-9 || sp_err > bf_err + 1e-9 {
            return Err(format!(
                "instance {inst} (k={k}, s={s}, r={r}): bruteforce {bf_err}, greedy {gr_err}, spectral {sp_err}"
            ));
        }
    }
    Ok(format!("20 instances, max(heuristic − bruteforce) = {worst_gap:.3e}"))
}

fn min_norm_correctness() -> Outcome {
    let mut worst_resid = 0.0f64;
    let mut worst_oracle = 0.0f64;
    for inst in 0..100u64 {
        let (a, b, zeroed) = common::full_rank_instance(inst);
        let x = solve_min_norm_least_squares(&a, &b, DEFAULT_SV_TOL).map_err(|e| e.to_string())?;
        let resid = norm(&common::normal_residual(&a, &x, &b));
        let allowed = 1e-8 * (1.0 + norm(&b));
        if resid > allowed {
            return Err(format!("instance {inst}: normal-equations residual {resid:e} > {allowed:e}"));
        }
        if let Some(&j) = zeroed.iter().find(|&&j| x[j] != 0.0) {
            return Err(format!("instance {inst}: zero column {j} got {}", x[j]));
        }
        let oracle = common::normal_equations_oracle(&a, &b).ok_or("oracle found rank deficiency")?;
        let diff = x.iter().zip(&oracle).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        if diff > 1e-9 {
            return Err(format!("instance {inst}: differs from oracle by {diff:e}"));
        }
        worst_resid = worst_resid.max(resid / (1.0 + norm(&b)));
        worst_oracle = worst_oracle.max(diff);
    }
    Ok(format!(
        "100 instances, max relative residual {worst_resid:.2e}, max oracle gap {worst_oracle:.2e}"
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = sweep_config(60, 6, vec![0.9, 1.0], vec![0.1, 0.3], 40, QRule::Matched);
    cfg.s_values = vec![6, 10];
    cfg.decoders = vec![DecoderKind::StochasticBlock, DecoderKind::Optimal, DecoderKind::AveragedBlock];
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for threads in [1, 2, 8] {
        let out = dir.path().join(format!("out{threads}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_sbcode"))
            .args(["sweep", "--config"])
            .arg(&cfg_path)
            .arg("--out-csv")
            .arg(&out)
            .args(["--threads", &threads.to_string()])
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("sweep with {threads} threads failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    if outputs.windows(2).all(|w| w[0] == w[1]) {
        Ok(format!("1, 2 and 8 threads gave identical {}-byte CSVs", outputs[0].len()))
    } else {
        Err("CSV bytes differ across thread counts".into())
    }
}

fn main() {
    let criteria: Vec<(&str, Duration, fn() -> Outcome)> = vec![
        ("FRC exactness", Duration::from_secs(30), frc_exactness),
        ("block-attack worst case", Duration::from_secs(30), block_attack_worst_case),
        ("sparse cross-block bound validation", Duration::from_secs(120), theorem1_validation),
        ("Bernoulli code bound validation", Duration::from_secs(120), corollary2_validation),
        ("error-curve shape", Duration::from_secs(300), figure_shape),
        ("union bound vs exhaustive enumeration", Duration::from_secs(5), lemma1_oracle),
        ("heuristic attacks vs brute force", Duration::from_secs(60), attack_oracle),
        ("min-norm least squares", Duration::from_secs(30), min_norm_correctness),
        ("sweep determinism across threads", Duration::from_secs(120), determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) if elapsed <= limit => (true, d),
            Ok(d) => (false, format!("{d}; exceeded {limit:?}")),
            Err(d) => (false, d),
        };
        failed += !pass as usize;
        println!(
            "criterion {} [{}]: {} ({}; {:.2}s)",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            detail,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
