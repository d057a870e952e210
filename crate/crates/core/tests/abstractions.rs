use proptest::prelude::*;

use tmg_core::basis::BasisSpec;
use tmg_core::block::BlockVector;
use tmg_core::dg::{apply_global, assemble_local, forward_solve, GlobalSystem};
use tmg_core::fourier::{block_dft, block_idft};
use tmg_core::mg::{build_transfers, random_guess, CycleConfig, LevelCount, SolveStats};
use tmg_core::stability::{smoothing_factor, DampingChoice};
use tmg_core::Executor;

fn dot(a: &BlockVector, b: &BlockVector) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dft_inverts(log_n in 2usize..7, p in 0usize..4, seed in any::<u64>()) {
        let u = random_guess(1 << log_n, p + 1, seed);
        let back = block_idft(&block_dft(&u).unwrap());
        for (a, b) in u.as_slice().iter().zip(back.as_slice()) {
            prop_assert!((a - b.re).abs() < 1e-12 && b.im.abs() < 1e-12);
        }
    }

    #[test]
    fn prolongation_is_restriction_transpose(log_n in 1usize..6, p in 0usize..4, tau in 1e-3f64..10.0, seed in any::<u64>()) {
        let steps = 1 << log_n;
        let t = build_transfers(&BasisSpec::lagrange(p), tau).unwrap();
        let exec = Executor::sequential();
        let fine = random_guess(2 * steps, p + 1, seed);
        let coarse = random_guess(steps, p + 1, seed.wrapping_add(1));
        let mut rf = BlockVector::zeros(steps, p + 1);
        t.restrict_into(&fine, &mut rf, &exec).unwrap();
        let mut pc = BlockVector::zeros(2 * steps, p + 1);
        t.prolongate_add(&coarse, &mut pc, &exec).unwrap();
        prop_assert!((dot(&rf, &coarse) - dot(&fine, &pc)).abs() < 1e-10 * (1.0 + dot(&rf, &coarse).abs()));
    }

    #[test]
    fn forward_substitution_solves(steps in 1usize..64, p in 0usize..4, tau in 1e-4f64..100.0, seed in any::<u64>()) {
        let sys = GlobalSystem::new(assemble_local(&BasisSpec::lagrange(p), tau).unwrap(), steps, false).unwrap();
        let f = random_guess(steps, p + 1, seed);
        let u = forward_solve(&sys, &f).unwrap();
        let back = apply_global(&sys, &u).unwrap();
        prop_assert!(back.max_abs_diff(&f) < 1e-9 * (1.0 + u.as_slice().iter().fold(0.0f64, |m, x| m.max(x.abs()))));
    }
}

#[test]
fn config_serde_roundtrip() {
    let cfg = CycleConfig {
        damping: DampingChoice::Fixed(0.7),
        levels: LevelCount::Count(3),
        ..CycleConfig::default()
    };
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(serde_json::from_str::<CycleConfig>(&text).unwrap(), cfg);
    let levels: LevelCount = serde_json::from_str(r#""max""#).unwrap();
    assert_eq!(levels, LevelCount::Max);
}

#[test]
fn report_serde_roundtrip() {
    let r = smoothing_factor(&BasisSpec::lagrange(1), 0.5, DampingChoice::Optimal, 64).unwrap();
    let back: tmg_core::stability::SmoothingReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);
    let stats = SolveStats {
        iterations: 2,
        residuals: vec![1.0, 0.1, 0.01],
        convergence_factor: 0.1,
        converged: true,
        seed: 1,
        workers: 1,
        times: Default::default(),
        total_time: 0.0,
    };
    let back: SolveStats = serde_json::from_str(&serde_json::to_string(&stats).unwrap()).unwrap();
    assert_eq!(back, stats);
}
