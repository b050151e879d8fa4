mod common;

use lupi_core::qp::{solve_qp, QpOptions, QpStatus};
use lupi_core::svm::{train_weighted_svm, DualCoordinateDescent, SvmConfig};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn matches_qp_on_random_instances() {
    let mut r = common::rng(11);
    let mut max_epochs = 0;
    for case in 0..200 {
        let n = r.gen_range(2..=40);
        let d = r.gen_range(1..=6);
        let bias = r.gen_bool(0.5);
        let (x, y) = common::random_binary(&mut r, n, d);
        let cost: Vec<f64> = (0..n).map(|_| 10f64.powf(r.gen_range(-2.0..2.0))).collect();
        let cfg = SvmConfig { use_bias: bias, ..SvmConfig::default() };
        let fit = train_weighted_svm(&x, &y, &cost, &cfg).unwrap();
        assert!(fit.converged, "case {case}");
        max_epochs = max_epochs.max(fit.epochs);

        let ys = common::signed(&y);
        let qp = common::svm_primal_qp(&x, &ys, &cost, &vec![1.0; n], bias);
        let sol = solve_qp(&qp, &QpOptions::default()).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal, "case {case}");
        let rel = (fit.primal_objective - sol.objective).abs() / sol.objective.abs().max(1e-12);
        assert!(rel <= 1e-4, "case {case}: {} vs {}", fit.primal_objective, sol.objective);
        assert!(fit.gap <= 1e-6 * fit.primal_objective.max(1.0));

        let d_aug = d + usize::from(bias);
        for i in 0..n {
            let row = x.row(i);
            let qp_score: f64 = (0..d).map(|j| sol.x[j] * row[j]).sum::<f64>()
                + if bias { sol.x[d_aug - 1] } else { 0.0 };
            if (qp_score * ys[i]).abs() >= 1e-3 {
                assert_eq!(
                    fit.model.decision(row) >= 0.0,
                    qp_score >= 0.0,
                    "case {case} sample {i}"
                );
            }
        }
    }
    eprintln!("max epochs: {max_epochs}");
}

#[test]
fn near_hard_margin_for_huge_cost() {
    let x = lupi_core::matrix::Matrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap();
    let cfg = SvmConfig { c: 1e6, use_bias: false, ..SvmConfig::default() };
    let fit = train_weighted_svm(&x, &[1, -1], &[1e6, 1e6], &cfg).unwrap();
    assert!((fit.primal_objective - 0.5).abs() <= 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dual_never_decreases(seed in 0u64..10_000, n in 2usize..30, d in 1usize..5, bias in any::<bool>()) {
        let mut r = common::rng(seed);
        let (x, y) = common::random_binary(&mut r, n, d);
        let cost: Vec<f64> = (0..n).map(|_| r.gen_range(0.1..5.0)).collect();
        let mut dcd = DualCoordinateDescent::new(&x, &y, &cost, bias, seed).unwrap();
        let mut prev = dcd.dual_objective();
        for _ in 0..50 {
            dcd.epoch();
            let cur = dcd.dual_objective();
            prop_assert!(cur >= prev - 1e-12 * prev.abs().max(1.0));
            prev = cur;
        }
    }

    #[test]
    fn label_flip_negates_weights(seed in 0u64..10_000, n in 2usize..25, d in 1usize..5) {
        let mut r = common::rng(seed);
        let (x, y) = common::random_binary(&mut r, n, d);
        let flipped: Vec<i64> = y.iter().map(|l| -l).collect();
        let cfg = SvmConfig { c: 1.3, use_bias: false, ..SvmConfig::default() };
        let a = train_weighted_svm(&x, &y, &vec![1.3; n], &cfg).unwrap();
        let b = train_weighted_svm(&x, &flipped, &vec![1.3; n], &cfg).unwrap();
        for (wa, wb) in a.model.w.iter().zip(&b.model.w) {
            prop_assert_eq!(*wa, -*wb);
        }
    }
}
