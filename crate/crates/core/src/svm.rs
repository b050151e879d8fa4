//! Weighted soft-margin linear SVM trained by dual coordinate descent.
//!
//! The primal is
//!
//! ```text
//! minimize ½‖w‖² + Σᵢ costᵢ · max(0, 1 − yᵢ⟨w, xᵢ⟩)
//! ```
//!
//! and the dual is a box-constrained QP in `0 ≤ αᵢ ≤ costᵢ`. A bias is
//! realized by appending a constant-1 feature, so it is regularized together
//! with `w`.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::signed_labels;
use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, norm_sq, Matrix};
use crate::rng;

/// Hyperplane `f(x) = ⟨w, x⟩ + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub w: Vec<f64>,
    pub b: f64,
}

impl LinearModel {
    pub fn zeros(d: usize) -> Self {
        Self { w: vec![0.0; d], b: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    #[inline]
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) + self.b
    }

    fn check_dim(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.w.len() {
            return Err(Error::Dimension {
                expected: self.w.len(),
                found: x.cols(),
            });
        }
        Ok(())
    }

    /// Multiply `w` and `b` by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            w: self.w.iter().map(|v| v * factor).collect(),
            b: self.b * factor,
        }
    }
}

/// Label of a decision value; zero maps to +1.
#[inline]
pub fn sign_label(score: f64) -> i64 {
    if score >= 0.0 {
        1
    } else {
        -1
    }
}

/// Decision values `⟨w, xᵢ⟩ + b` for every row.
pub fn predict(model: &LinearModel, x: &Matrix) -> Result<Vec<f64>> {
    model.check_dim(x)?;
    Ok(x.iter_rows().map(|row| model.decision(row)).collect())
}

pub fn predict_labels(model: &LinearModel, x: &Matrix) -> Result<Vec<i64>> {
    Ok(predict(model, x)?.into_iter().map(sign_label).collect())
}

/// Signed distances `yᵢ (⟨w, xᵢ⟩ + b)` (unnormalized by ‖w‖).
pub fn decision_margins(model: &LinearModel, x: &Matrix, y: &[i64]) -> Result<Vec<f64>> {
    if y.len() != x.rows() {
        return Err(Error::RowMismatch {
            left: "samples".into(),
            left_rows: x.rows(),
            right: "labels".into(),
            right_rows: y.len(),
        });
    }
    let ys = signed_labels(y)?;
    Ok(predict(model, x)?
        .into_iter()
        .zip(ys)
        .map(|(s, l)| l * s)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub use_bias: bool,
    /// Bound on the projected-gradient violation and on the relative
    /// duality gap.
    pub tol: f64,
    pub max_epochs: usize,
    /// Seed of the per-epoch coordinate permutation.
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            use_bias: true,
            tol: 1e-6,
            max_epochs: 10_000,
            seed: 0,
        }
    }
}

impl SvmConfig {
    pub fn with_c(c: f64) -> Self {
        Self { c, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidArgument(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Trained model plus its optimality certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmFit {
    pub model: LinearModel,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `primal − dual`, never negative up to rounding.
    pub gap: f64,
    pub epochs: usize,
    /// False when `max_epochs` ran out first.
    pub converged: bool,
    pub alpha: Vec<f64>,
}

/// Dual coordinate descent state. Exposed so callers can step epochs and
/// watch the dual objective.
pub struct DualCoordinateDescent<'a> {
    x: &'a Matrix,
    y: Vec<f64>,
    cost: Vec<f64>,
    bias: bool,
    alpha: Vec<f64>,
    /// Weights, with the bias weight last when `bias` is set.
    w: Vec<f64>,
    diag: Vec<f64>,
    order: Vec<usize>,
    rng: rng::Rng,
}

impl<'a> DualCoordinateDescent<'a> {
    pub fn new(x: &'a Matrix, y: &[i64], cost: &[f64], use_bias: bool, seed: u64) -> Result<Self> {
        let n = x.rows();
        if y.len() != n || cost.len() != n {
            return Err(Error::RowMismatch {
                left: "samples".into(),
                left_rows: n,
                right: if y.len() != n { "labels" } else { "costs" }.into(),
                right_rows: if y.len() != n { y.len() } else { cost.len() },
            });
        }
        if n == 0 {
            return Err(Error::Data("no training samples".into()));
        }
        if !x.is_finite() {
            return Err(Error::Data("non-finite feature value".into()));
        }
        if let Some(c) = cost.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "per-sample costs must be positive and finite, got {c}"
            )));
        }
        let y = signed_labels(y)?;
        let extra = if use_bias { 1.0 } else { 0.0 };
        let diag = x.iter_rows().map(|row| norm_sq(row) + extra).collect();
        Ok(Self {
            x,
            y,
            cost: cost.to_vec(),
            bias: use_bias,
            alpha: vec![0.0; n],
            w: vec![0.0; x.cols() + usize::from(use_bias)],
            diag,
            order: (0..n).collect(),
            rng: rng::rng(seed),
        })
    }

    #[inline]
    fn score(&self, i: usize) -> f64 {
        let d = self.x.cols();
        let mut s = dot(&self.w[..d], self.x.row(i));
        if self.bias {
            s += self.w[d];
        }
        s
    }

    /// Projected gradient of coordinate `i` at the current iterate.
    #[inline]
    fn gradient(&self, i: usize) -> (f64, f64) {
        let grad = self.y[i] * self.score(i) - 1.0;
        let (a, c) = (self.alpha[i], self.cost[i]);
        let pg = if a <= 0.0 {
            grad.min(0.0)
        } else if a >= c {
            grad.max(0.0)
        } else {
            grad
        };
        (grad, pg)
    }

    /// Exact minimization along coordinate `i`.
    #[inline]
    fn update(&mut self, i: usize, grad: f64) {
        let (a, c) = (self.alpha[i], self.cost[i]);
        let next = if self.diag[i] > 0.0 {
            (a - grad / self.diag[i]).clamp(0.0, c)
        } else if grad < 0.0 {
            c
        } else {
            0.0
        };
        let delta = (next - a) * self.y[i];
        if delta != 0.0 {
            let d = self.x.cols();
            self.alpha[i] = next;
            axpy(delta, self.x.row(i), &mut self.w[..d]);
            if self.bias {
                self.w[d] += delta;
            }
        }
    }

    /// One pass over a fresh random permutation. Returns the largest
    /// projected-gradient magnitude seen before each update.
    pub fn epoch(&mut self) -> f64 {
        let mut active = self.order.len();
        self.pass(&mut active, None).max
    }

    /// One pass over the first `active` entries of the coordinate order.
    /// With `shrink` bounds, coordinates stuck at a bound whose gradient
    /// points outward beyond the previous pass's extreme violations are
    /// moved behind the active prefix.
    fn pass(&mut self, active: &mut usize, shrink: Option<Violation>) -> Violation {
        self.order[..*active].shuffle(&mut self.rng);
        let mut seen = Violation::EMPTY;
        let mut k = 0;
        while k < *active {
            let i = self.order[k];
            let (grad, pg) = self.gradient(i);
            if let Some(bound) = shrink {
                let a = self.alpha[i];
                if (a <= 0.0 && grad > bound.hi) || (a >= self.cost[i] && grad < bound.lo) {
                    *active -= 1;
                    self.order.swap(k, *active);
                    continue;
                }
            }
            seen.record(pg);
            if pg != 0.0 {
                self.update(i, grad);
            }
            k += 1;
        }
        seen
    }

    /// `Σαᵢ − ½‖w‖²`.
    pub fn dual_objective(&self) -> f64 {
        self.alpha.iter().sum::<f64>() - 0.5 * norm_sq(&self.w)
    }

    /// `½‖w‖² + Σ costᵢ hingeᵢ`.
    pub fn primal_objective(&self) -> f64 {
        let loss: f64 = (0..self.y.len())
            .map(|i| self.cost[i] * (1.0 - self.y[i] * self.score(i)).max(0.0))
            .sum();
        0.5 * norm_sq(&self.w) + loss
    }

    pub fn model(&self) -> LinearModel {
        let d = self.x.cols();
        LinearModel {
            w: self.w[..d].to_vec(),
            b: if self.bias { self.w[d] } else { 0.0 },
        }
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
}

/// Extreme signed projected gradients of one pass.
#[derive(Debug, Clone, Copy)]
struct Violation {
    lo: f64,
    hi: f64,
    max: f64,
}

impl Violation {
    const EMPTY: Self = Self {
        lo: f64::INFINITY,
        hi: f64::NEG_INFINITY,
        max: 0.0,
    };
    const UNBOUNDED: Self = Self {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
        max: f64::INFINITY,
    };

    fn record(&mut self, pg: f64) {
        self.lo = self.lo.min(pg);
        self.hi = self.hi.max(pg);
        self.max = self.max.max(pg.abs());
    }

    fn shrink_bounds(self) -> Self {
        Self {
            lo: if self.lo >= 0.0 { f64::NEG_INFINITY } else { self.lo },
            hi: if self.hi <= 0.0 { f64::INFINITY } else { self.hi },
            max: self.max,
        }
    }
}

fn relative_gap(primal: f64, dual: f64) -> f64 {
    (primal - dual) / primal.abs().max(1.0)
}

/// Train with an individual slack cost per sample.
pub fn train_weighted_svm(x: &Matrix, y: &[i64], cost: &[f64], config: &SvmConfig) -> Result<SvmFit> {
    config.validate()?;
    let mut dcd = DualCoordinateDescent::new(x, y, cost, config.use_bias, config.seed)?;
    let n = x.rows();
    let mut active = n;
    let mut bound = Violation::UNBOUNDED;
    let mut epochs = 0;
    let mut converged = false;
    while epochs < config.max_epochs {
        let seen = dcd.pass(&mut active, Some(bound));
        epochs += 1;
        if seen.max <= config.tol {
            if active == n
                && relative_gap(dcd.primal_objective(), dcd.dual_objective()) <= config.tol
            {
                converged = true;
                break;
            }
            // Converged on the shrunk problem or gap still open: revisit all.
            active = n;
            bound = Violation::UNBOUNDED;
            continue;
        }
        bound = seen.shrink_bounds();
    }
    let primal = dcd.primal_objective();
    let dual = dcd.dual_objective();
    Ok(SvmFit {
        model: dcd.model(),
        primal_objective: primal,
        dual_objective: dual,
        gap: primal - dual,
        epochs,
        converged,
        alpha: dcd.alpha,
    })
}

/// Plain soft-margin SVM: every sample costs `config.c`.
pub fn train_svm(x: &Matrix, y: &[i64], config: &SvmConfig) -> Result<SvmFit> {
    let cost = vec![config.c; x.rows()];
    train_weighted_svm(x, y, &cost, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_bias(c: f64) -> SvmConfig {
        SvmConfig {
            c,
            use_bias: false,
            ..Default::default()
        }
    }

    #[test]
    fn two_point_hard_margin() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap();
        let fit = train_weighted_svm(&x, &[1, -1], &[10.0, 10.0], &no_bias(10.0)).unwrap();
        assert!(fit.converged);
        assert!((fit.model.w[0] - 1.0).abs() < 1e-6 && fit.model.w[1].abs() < 1e-12);
        assert!((fit.primal_objective - 0.5).abs() < 1e-6);
    }

    #[test]
    fn single_point_capped_dual() {
        // ½w² + 0.5·max(0, 1 − w) is minimized at w = 0.5.
        let x = Matrix::from_rows(&[[1.0]]).unwrap();
        let fit = train_weighted_svm(&x, &[1], &[0.5], &no_bias(0.5)).unwrap();
        assert!((fit.model.w[0] - 0.5).abs() < 1e-9);
        assert!((fit.primal_objective - 0.375).abs() < 1e-9);
    }

    #[test]
    fn uniform_cost_matches_plain_entry_point() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [-1.0, 0.5], [0.3, -2.0], [2.0, 1.0]]).unwrap();
        let y = [1, -1, -1, 1];
        let cfg = SvmConfig::with_c(0.7);
        let a = train_svm(&x, &y, &cfg).unwrap();
        let b = train_weighted_svm(&x, &y, &[0.7; 4], &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn predict_examples() {
        let m = LinearModel { w: vec![1.0, 0.0], b: 0.0 };
        let x = Matrix::from_rows(&[[2.0, 5.0]]).unwrap();
        assert_eq!(predict(&m, &x).unwrap(), vec![2.0]);
        let zero = LinearModel::zeros(2);
        assert_eq!(predict(&zero, &x).unwrap(), vec![0.0]);
        assert_eq!(predict_labels(&zero, &x).unwrap(), vec![1]);
        let shifted = LinearModel { w: vec![1.0, 0.0], b: -3.0 };
        let x2 = Matrix::from_rows(&[[2.0, 0.0]]).unwrap();
        assert_eq!(predict(&shifted, &x2).unwrap(), vec![-1.0]);
        assert_eq!(predict_labels(&shifted, &x2).unwrap(), vec![-1]);
        assert!(predict(&m, &Matrix::from_rows(&[[1.0]]).unwrap()).is_err());
    }

    #[test]
    fn margins_examples() {
        let m = LinearModel { w: vec![1.0], b: 0.0 };
        let x = Matrix::from_rows(&[[3.0], [3.0], [0.0], [0.0]]).unwrap();
        assert_eq!(
            decision_margins(&m, &x, &[1, -1, 1, -1]).unwrap(),
            vec![3.0, -3.0, 0.0, 0.0]
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        assert!(train_weighted_svm(&x, &[1, -1], &[1.0, 0.0], &no_bias(1.0)).is_err());
        assert!(train_weighted_svm(&x, &[1, 2], &[1.0, 1.0], &no_bias(1.0)).is_err());
        assert!(train_svm(&x, &[1, -1], &SvmConfig::with_c(-1.0)).is_err());
    }

    #[test]
    fn zero_row_saturates_at_cost() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let fit = train_weighted_svm(&x, &[1, 1], &[2.0, 2.0], &no_bias(2.0)).unwrap();
        assert_eq!(fit.alpha[0], 2.0);
        assert!(fit.converged);
    }
}
