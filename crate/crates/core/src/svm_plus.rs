//! SVM+ with linear decision and slack functions.
//!
//! The slack of sample `i` is modeled as `⟨w*, x*ᵢ⟩ + b*`, a linear function
//! of its privileged features. Training solves the primal QP over
//! `(w, b, w*, b*)`:
//!
//! ```text
//! minimize   ½(‖w‖² + γ‖w*‖²) + C Σᵢ (⟨w*, x*ᵢ⟩ + b*)
//! subject to yᵢ(⟨w, xᵢ⟩ + b) ≥ 1 − (⟨w*, x*ᵢ⟩ + b*)
//!            ⟨w*, x*ᵢ⟩ + b* ≥ 0
//! ```

use serde::{Deserialize, Serialize};

use crate::data::signed_labels;
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::qp::{solve_qp, QpOptions, QpProblem, QpStatus};
use crate::svm::LinearModel;

/// Slack function `x* ↦ ⟨w*, x*⟩ + b*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackModel {
    pub w_star: Vec<f64>,
    pub b_star: f64,
}

impl SlackModel {
    #[inline]
    pub fn value(&self, x_star: &[f64]) -> f64 {
        dot(&self.w_star, x_star) + self.b_star
    }
}

/// Slack assigned to every row. Large values mark hard samples, values near
/// zero easy ones.
pub fn slack_values(slack: &SlackModel, x_star: &Matrix) -> Result<Vec<f64>> {
    if x_star.cols() != slack.w_star.len() {
        return Err(Error::Dimension {
            expected: slack.w_star.len(),
            found: x_star.cols(),
        });
    }
    Ok(x_star.iter_rows().map(|r| slack.value(r)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmPlusConfig {
    pub c: f64,
    pub gamma: f64,
    /// KKT tolerance handed to the QP solver.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmPlusConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: 1.0,
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

impl SvmPlusConfig {
    pub fn new(c: f64, gamma: f64) -> Self {
        Self { c, gamma, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("C", self.c), ("gamma", self.gamma), ("tol", self.tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// The two constraint families of the training problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintBlock {
    /// `yᵢ f(xᵢ) ≥ 1 − slackᵢ`
    Margin,
    /// `slackᵢ ≥ 0`
    SlackNonNegative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmPlusFit {
    pub model: LinearModel,
    pub slack: SlackModel,
    pub objective: f64,
    pub kkt_residual: f64,
    pub status: QpStatus,
    /// Slack function evaluated on the training samples.
    pub slack_values: Vec<f64>,
    /// Largest violation per block, margin block first.
    pub violations: [f64; 2],
    /// Set when the solver stopped before reaching the tolerance.
    pub most_violated: Option<ConstraintBlock>,
}

/// The training objective evaluated at given decision and slack functions.
pub fn svm_plus_objective(
    model: &LinearModel,
    slack: &SlackModel,
    x_star: &Matrix,
    config: &SvmPlusConfig,
) -> f64 {
    let total_slack: f64 = x_star.iter_rows().map(|r| slack.value(r)).sum();
    0.5 * (dot(&model.w, &model.w) + config.gamma * dot(&slack.w_star, &slack.w_star))
        + config.c * total_slack
}

/// Largest violation of the margin and the slack non-negativity blocks.
pub fn constraint_violations(
    model: &LinearModel,
    slack: &SlackModel,
    x: &Matrix,
    x_star: &Matrix,
    y: &[f64],
) -> [f64; 2] {
    let mut out = [f64::NEG_INFINITY; 2];
    for i in 0..x.rows() {
        let s = slack.value(x_star.row(i));
        out[0] = out[0].max(1.0 - s - y[i] * model.decision(x.row(i)));
        out[1] = out[1].max(-s);
    }
    out
}

/// Primal QP in `(w, b, w*, b*)`, variables laid out in that order.
pub fn svm_plus_qp(x: &Matrix, x_star: &Matrix, y: &[f64], config: &SvmPlusConfig) -> QpProblem {
    let (n, d, ds) = (x.rows(), x.cols(), x_star.cols());
    let nv = d + 1 + ds + 1;
    let (wb, ws, bs) = (d, d + 1, d + 1 + ds);
    let mut p = Matrix::zeros(nv, nv);
    for j in 0..d {
        p.row_mut(j)[j] = 1.0;
    }
    for j in 0..ds {
        p.row_mut(ws + j)[ws + j] = config.gamma;
    }
    let mut q = vec![0.0; nv];
    for row in x_star.iter_rows() {
        for (qj, v) in q[ws..bs].iter_mut().zip(row) {
            *qj += config.c * v;
        }
    }
    q[bs] = config.c * n as f64;

    let mut g = Matrix::zeros(2 * n, nv);
    let mut h = vec![0.0; 2 * n];
    for i in 0..n {
        // −yᵢ(⟨w, xᵢ⟩ + b) − (⟨w*, x*ᵢ⟩ + b*) ≤ −1
        let row = g.row_mut(i);
        for (r, v) in row[..d].iter_mut().zip(x.row(i)) {
            *r = -y[i] * v;
        }
        row[wb] = -y[i];
        for (r, v) in row[ws..bs].iter_mut().zip(x_star.row(i)) {
            *r = -v;
        }
        row[bs] = -1.0;
        h[i] = -1.0;
        // −(⟨w*, x*ᵢ⟩ + b*) ≤ 0
        let row = g.row_mut(n + i);
        for (r, v) in row[ws..bs].iter_mut().zip(x_star.row(i)) {
            *r = -v;
        }
        row[bs] = -1.0;
    }
    QpProblem::new(p, q).with_inequalities(g, h)
}

pub fn train_svm_plus(x: &Matrix, x_star: &Matrix, y: &[i64], config: &SvmPlusConfig) -> Result<SvmPlusFit> {
    config.validate()?;
    if x_star.rows() != x.rows() || y.len() != x.rows() {
        return Err(Error::RowMismatch {
            left: "features".into(),
            left_rows: x.rows(),
            right: if x_star.rows() != x.rows() { "privileged" } else { "labels" }.into(),
            right_rows: if x_star.rows() != x.rows() { x_star.rows() } else { y.len() },
        });
    }
    if x.rows() == 0 {
        return Err(Error::Data("no training samples".into()));
    }
    let ys = signed_labels(y)?;
    let qp = svm_plus_qp(x, x_star, &ys, config);
    let sol = solve_qp(
        &qp,
        &QpOptions {
            tol: config.tol,
            max_iter: config.max_iter,
        },
    )?;
    let (d, ds) = (x.cols(), x_star.cols());
    let model = LinearModel {
        w: sol.x[..d].to_vec(),
        b: sol.x[d],
    };
    let slack = SlackModel {
        w_star: sol.x[d + 1..d + 1 + ds].to_vec(),
        b_star: sol.x[d + 1 + ds],
    };
    let violations = constraint_violations(&model, &slack, x, x_star, &ys);
    let most_violated = match sol.status {
        QpStatus::Optimal => None,
        _ if violations[0] >= violations[1] => Some(ConstraintBlock::Margin),
        _ => Some(ConstraintBlock::SlackNonNegative),
    };
    if sol.status == QpStatus::Infeasible {
        return Err(Error::Solver(format!(
            "SVM+ QP reported infeasible (residual {:e}); most violated block: {:?} ({:e})",
            sol.kkt_residual,
            most_violated.expect("set for non-optimal exits"),
            violations[0].max(violations[1]),
        )));
    }
    let slack_values = slack_values(&slack, x_star)?;
    Ok(SvmPlusFit {
        objective: svm_plus_objective(&model, &slack, x_star, config),
        model,
        slack,
        kkt_residual: sol.kkt_residual,
        status: sol.status,
        slack_values,
        violations,
        most_violated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slack_value_examples() {
        let s = SlackModel { w_star: vec![1.0], b_star: 0.0 };
        let x = Matrix::from_rows(&[[10.0], [0.0]]).unwrap();
        assert_eq!(slack_values(&s, &x).unwrap(), vec![10.0, 0.0]);
        let c = SlackModel { w_star: vec![0.0], b_star: 0.5 };
        assert_eq!(slack_values(&c, &x).unwrap(), vec![0.5, 0.5]);
        assert!(slack_values(&s, &Matrix::from_rows(&[[1.0, 2.0]]).unwrap()).is_err());
    }

    #[test]
    fn separable_pair_has_zero_slack() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap();
        let xs = Matrix::from_rows(&[[0.3], [-0.7]]).unwrap();
        for gamma in [0.01, 1.0, 100.0] {
            let fit = train_svm_plus(&x, &xs, &[1, -1], &SvmPlusConfig::new(1.0, gamma)).unwrap();
            assert_eq!(fit.status, QpStatus::Optimal);
            for s in &fit.slack_values {
                assert!(s.abs() < 1e-6, "{s}");
            }
            assert!((fit.model.w[0] - 1.0).abs() < 1e-6);
            assert!(fit.model.w[1].abs() < 1e-6);
            assert!(fit.model.b.abs() < 1e-6);
            assert!((fit.objective - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn kkt_residual_within_tol() {
        let x = Matrix::from_rows(&[[1.0, 0.2], [-0.5, 1.0], [0.4, -0.3], [-1.0, -1.0]]).unwrap();
        let xs = Matrix::from_rows(&[[1.0], [0.1], [2.0], [0.0]]).unwrap();
        let cfg = SvmPlusConfig::new(2.0, 0.5);
        let fit = train_svm_plus(&x, &xs, &[1, 1, -1, -1], &cfg).unwrap();
        assert_eq!(fit.status, QpStatus::Optimal);
        assert!(fit.kkt_residual <= cfg.tol);
        assert!(fit.violations[0] <= 1e-6 && fit.violations[1] <= 1e-6);
    }

    #[test]
    fn rejects_misaligned_privileged() {
        let x = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        let xs = Matrix::from_rows(&[[1.0]]).unwrap();
        assert!(train_svm_plus(&x, &xs, &[1, -1], &SvmPlusConfig::default()).is_err());
    }
}
