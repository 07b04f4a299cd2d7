use sbcode::codes::{BlockLayout, CodeFamily, CodeSpec};
use sbcode::decoding::DecoderKind;
use sbcode::experiments::gd::run_gd_demo;
use sbcode::experiments::{run_sweep, QRule, StragglerModel, SweepConfig};

fn cfg(trials: usize) -> SweepConfig {
    SweepConfig {
        k: 100,
        s_values: vec![10],
        p_values: vec![1.0],
        epsilon_values: (1..=10).map(|i| 0.05 * i as f64).collect(),
        trials,
        decoders: vec![DecoderKind::StochasticBlock],
        straggler_model: StragglerModel::Random,
        master_seed: 11,
        q_rule: QRule::Matched,
        layout: BlockLayout::Exact,
    }
}

#[test]
fn frc_error_grows_with_straggler_fraction() {
    let res = run_sweep(&cfg(5000), 0).unwrap();
    let means: Vec<f64> = res.cells.iter().map(|c| c.mean_err).collect();
    for w in means.windows(2) {
        assert!(w[0] <= w[1], "{means:?}");
    }
    for c in &res.cells {
        assert_eq!(c.uncoded, c.epsilon);
    }
}

#[test]
fn frc_near_perfect_at_moderate_stragglers() {
    let mut c = cfg(500);
    c.epsilon_values = vec![0.2];
    let res = run_sweep(&c, 0).unwrap();
    assert!(res.cells[0].mean_err_over_k < 1e-3);
}

#[test]
fn block_attack_model_hits_k_minus_r() {
    let mut c = cfg(3);
    c.straggler_model = StragglerModel::BlockAttack;
    c.decoders = vec![DecoderKind::Optimal];
    c.epsilon_values = vec![0.2, 0.3];
    let res = run_sweep(&c, 0).unwrap();
    for cell in &res.cells {
        assert!((cell.mean_err - (100 - cell.r) as f64).abs() < 1e-6);
        assert!(cell.bound.is_none());
    }
}

#[test]
fn gd_demo_tracks_full_gradient_for_frc() {
    let spec = CodeSpec::new(100, 12, 1.0, 0.0, CodeFamily::Frc, BlockLayout::Truncated).unwrap();
    let rep = run_gd_demo(&spec, DecoderKind::StochasticBlock, 0.2, 60, 5, 3).unwrap();
    let (coded, full) = (rep.coded.final_objective(), rep.full.final_objective());
    assert!((coded - full).abs() <= 0.01 * full, "coded {coded}, full {full}");
    assert!(!rep.coded.diverged);
}
