mod common;

use lupi_core::matrix::{dot, Matrix};
use lupi_core::qp::{solve_qp, QpOptions, QpProblem, QpStatus};
use lupi_core::svm_plus::{constraint_violations, train_svm_plus, SvmPlusConfig};
use rand::Rng;

fn random_instance(r: &mut rand_chacha::ChaCha8Rng) -> (Matrix, Matrix, Vec<i64>, SvmPlusConfig) {
    let n = r.gen_range(2..=30);
    let d = r.gen_range(1..=5);
    let ds = r.gen_range(1..=3);
    let (x, y) = common::random_binary(r, n, d);
    let xs = common::random_matrix(r, n, ds);
    let cfg = SvmPlusConfig::new(10f64.powf(r.gen_range(-2.0..2.0)), 10f64.powf(r.gen_range(-2.0..2.0)));
    (x, xs, y, cfg)
}

#[test]
fn feasible_and_objective_recomputes() {
    let mut r = common::rng(21);
    for case in 0..100 {
        let (x, xs, y, cfg) = random_instance(&mut r);
        let fit = train_svm_plus(&x, &xs, &y, &cfg).unwrap();
        let ys = common::signed(&y);
        for i in 0..x.rows() {
            let s = dot(&fit.slack.w_star, xs.row(i)) + fit.slack.b_star;
            let f = dot(&fit.model.w, x.row(i)) + fit.model.b;
            assert!(ys[i] * f >= 1.0 - s - 1e-6, "case {case}: margin row {i}");
            assert!(s >= -1e-6, "case {case}: slack row {i} = {s}");
        }
        let total: f64 = (0..x.rows())
            .map(|i| dot(&fit.slack.w_star, xs.row(i)) + fit.slack.b_star)
            .sum();
        let objective = 0.5 * dot(&fit.model.w, &fit.model.w)
            + 0.5 * cfg.gamma * dot(&fit.slack.w_star, &fit.slack.w_star)
            + cfg.c * total;
        assert!((objective - fit.objective).abs() <= 1e-8 * objective.abs().max(1.0), "case {case}");
        let v = constraint_violations(&fit.model, &fit.slack, &x, &xs, &ys);
        assert!(v[0] <= 1e-6 && v[1] <= 1e-6);
    }
}

#[test]
fn zero_privileged_features_reduce_to_shared_slack() {
    // With x* ≡ 0 every sample gets the same slack t = b*, so the problem is
    // ½‖w‖² + C·n·t subject to yᵢ f(xᵢ) ≥ 1 − t, t ≥ 0.
    let mut r = common::rng(22);
    for case in 0..30 {
        let n = r.gen_range(2..=20);
        let d = r.gen_range(1..=4);
        let (x, y) = common::random_binary(&mut r, n, d);
        let xs = Matrix::zeros(n, 2);
        let cfg = SvmPlusConfig::new(10f64.powf(r.gen_range(-1.0..1.0)), 1.0);
        let fit = train_svm_plus(&x, &xs, &y, &cfg).unwrap();

        let nv = d + 2;
        let mut p = Matrix::zeros(nv, nv);
        for j in 0..d {
            p.row_mut(j)[j] = 1.0;
        }
        let mut q = vec![0.0; nv];
        q[d + 1] = cfg.c * n as f64;
        let mut g = Matrix::zeros(n + 1, nv);
        let mut h = vec![0.0; n + 1];
        for i in 0..n {
            let yi = y[i] as f64;
            let row = g.row_mut(i);
            for j in 0..d {
                row[j] = -yi * x.row(i)[j];
            }
            row[d] = -yi;
            row[d + 1] = -1.0;
            h[i] = -1.0;
        }
        g.row_mut(n)[d + 1] = -1.0;
        let reduced = solve_qp(&QpProblem::new(p, q).with_inequalities(g, h), &QpOptions::default()).unwrap();
        assert_eq!(reduced.status, QpStatus::Optimal);
        let rel = (fit.objective - reduced.objective).abs() / reduced.objective.abs().max(1.0);
        assert!(rel <= 1e-6, "case {case}: {} vs {}", fit.objective, reduced.objective);
        assert!(fit.slack.w_star.iter().all(|v| v.abs() < 1e-6));
    }
}

#[test]
fn larger_gamma_never_grows_slack_weights() {
    let mut r = common::rng(23);
    for case in 0..40 {
        let (x, xs, y, cfg) = random_instance(&mut r);
        let a = train_svm_plus(&x, &xs, &y, &cfg).unwrap();
        let b = train_svm_plus(&x, &xs, &y, &SvmPlusConfig { gamma: cfg.gamma * 10.0, ..cfg }).unwrap();
        let na = dot(&a.slack.w_star, &a.slack.w_star).sqrt();
        let nb = dot(&b.slack.w_star, &b.slack.w_star).sqrt();
        assert!(nb <= na + 1e-6, "case {case}: {na} -> {nb}");
    }
}

#[test]
fn separable_data_gets_zero_slack() {
    let x = Matrix::from_rows(&[[2.0, 1.0], [1.5, -1.0], [-2.0, 0.5], [-1.0, -1.5]]).unwrap();
    let xs = Matrix::from_rows(&[[0.1, 1.0], [0.5, -0.2], [-0.3, 0.3], [0.9, 0.4]]).unwrap();
    let fit = train_svm_plus(&x, &xs, &[1, 1, -1, -1], &SvmPlusConfig::new(100.0, 1.0)).unwrap();
    assert_eq!(fit.status, QpStatus::Optimal);
    assert!(fit.slack_values.iter().all(|s| s.abs() < 1e-6), "{:?}", fit.slack_values);
}

#[test]
fn misaligned_rows_are_rejected() {
    let x = Matrix::from_rows(&[[1.0], [-1.0]]).unwrap();
    let xs = Matrix::from_rows(&[[1.0]]).unwrap();
    let err = train_svm_plus(&x, &xs, &[1, -1], &SvmPlusConfig::default()).unwrap_err();
    assert!(err.to_string().contains("row-count mismatch"));
}
