//! Margin Transfer: a teacher SVM in the privileged space decides how far
//! from the hyperplane each sample should be pushed in the original space.
//!
//! Stage 1 trains a plain SVM on `(x*, y)`. Its margins `yᵢ f*(x*ᵢ)`,
//! floored at `ε`, become per-sample target margins `ρᵢ`. Stage 2 solves
//!
//! ```text
//! minimize ½‖w‖² + C Σᵢ ξᵢ   s.t.  yᵢ⟨w, xᵢ⟩ ≥ ρᵢ − ξᵢ,  ξᵢ ≥ 0
//! ```
//!
//! by dividing each constraint by `ρᵢ`: a weighted SVM on `xᵢ / ρᵢ` with
//! slack cost `C ρᵢ` and unit margins.

use serde::{Deserialize, Serialize};

use crate::data::{signed_labels, Dataset};
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::svm::{decision_margins, train_svm, train_weighted_svm, LinearModel, SvmConfig, SvmFit};

pub const DEFAULT_EPSILON: f64 = 0.1;

/// Per-sample target margins, all at least `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginVector {
    pub rho: Vec<f64>,
    pub epsilon: f64,
}

impl MarginVector {
    /// Floor raw margins at `epsilon`.
    pub fn threshold(raw: &[f64], epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if let Some(v) = raw.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite margin {v}")));
        }
        Ok(Self {
            rho: raw.iter().map(|&r| r.max(epsilon)).collect(),
            epsilon,
        })
    }

    /// Margins fixed by the caller, e.g. from human scores or a forced
    /// uniform vector. Every entry must already be at least `epsilon`.
    pub fn from_values(rho: Vec<f64>, epsilon: f64) -> Result<Self> {
        let checked = Self::threshold(&rho, epsilon)?;
        if checked.rho != rho {
            return Err(Error::InvalidArgument(format!(
                "margins must be at least epsilon = {epsilon}"
            )));
        }
        Ok(checked)
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    fn summary(&self) -> String {
        let lo = self.rho.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let floored = self.rho.iter().filter(|&&r| r == self.epsilon).count();
        format!(
            "{} margins in [{lo}, {hi}], {floored} at epsilon = {}",
            self.rho.len(),
            self.epsilon
        )
    }
}

/// Teacher margins `yᵢ f*(x*ᵢ)`, floored at `epsilon`.
pub fn compute_transfer_margins(
    teacher: &LinearModel,
    x_star: &Matrix,
    y: &[i64],
    epsilon: f64,
) -> Result<MarginVector> {
    let raw = decision_margins(teacher, x_star, y)?;
    MarginVector::threshold(&raw, epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginTransferConfig {
    /// C of the privileged-space teacher.
    pub c_priv: f64,
    /// C of the original-space student.
    pub c_orig: f64,
    pub epsilon: f64,
    /// Give the student a bias term. Off by default.
    pub student_bias: bool,
    /// Solver settings shared by both stages; `c` and `use_bias` are
    /// overridden per stage.
    pub solver: SvmConfig,
}

impl Default for MarginTransferConfig {
    fn default() -> Self {
        Self {
            c_priv: 1.0,
            c_orig: 1.0,
            epsilon: DEFAULT_EPSILON,
            student_bias: false,
            solver: SvmConfig::default(),
        }
    }
}

impl MarginTransferConfig {
    pub fn new(c_orig: f64, c_priv: f64) -> Self {
        Self {
            c_orig,
            c_priv,
            ..Self::default()
        }
    }

    fn teacher_config(&self) -> SvmConfig {
        SvmConfig {
            c: self.c_priv,
            use_bias: true,
            ..self.solver
        }
    }
}

/// Stage-2 weighted SVM on `xᵢ/ρᵢ` with costs `c_orig ρᵢ`. With `bias`, a
/// constant-1 column is appended before the division so the bias follows the
/// same change of variables.
pub fn train_student(
    x: &Matrix,
    y: &[i64],
    margins: &MarginVector,
    c_orig: f64,
    bias: bool,
    solver: &SvmConfig,
) -> Result<SvmFit> {
    if margins.len() != x.rows() {
        return Err(Error::RowMismatch {
            left: "samples".into(),
            left_rows: x.rows(),
            right: "margins".into(),
            right_rows: margins.len(),
        });
    }
    let d = x.cols();
    let width = d + usize::from(bias);
    let mut scaled = Matrix::zeros(x.rows(), width);
    for i in 0..x.rows() {
        let rho = margins.rho[i];
        let dst = scaled.row_mut(i);
        for (t, s) in dst[..d].iter_mut().zip(x.row(i)) {
            *t = s / rho;
        }
        if bias {
            dst[d] = 1.0 / rho;
        }
    }
    let cost: Vec<f64> = margins.rho.iter().map(|r| c_orig * r).collect();
    let config = SvmConfig {
        c: c_orig,
        use_bias: false,
        ..*solver
    };
    let mut fit = train_weighted_svm(&scaled, y, &cost, &config)?;
    if bias {
        fit.model.b = fit.model.w.pop().expect("bias column present");
    }
    Ok(fit)
}

/// `½(‖w‖² + b²) + C Σᵢ max(0, ρᵢ − yᵢ f(xᵢ))`, the data-dependent-margin
/// objective in the original variables. A student bias is regularized along
/// with `w`, as in the augmented-feature solver.
pub fn transfer_objective(model: &LinearModel, x: &Matrix, y: &[i64], margins: &MarginVector, c: f64) -> Result<f64> {
    let ys = signed_labels(y)?;
    let loss: f64 = x
        .iter_rows()
        .enumerate()
        .map(|(i, row)| (margins.rho[i] - ys[i] * model.decision(row)).max(0.0))
        .sum();
    Ok(0.5 * (dot(&model.w, &model.w) + model.b * model.b) + c * loss)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginTransferFit {
    pub student: LinearModel,
    pub margins: MarginVector,
    pub teacher: LinearModel,
    pub student_fit: SvmFit,
    pub teacher_fit: SvmFit,
}

pub fn train_margin_transfer(data: &Dataset, config: &MarginTransferConfig) -> Result<MarginTransferFit> {
    let x_star = data.privileged()?;
    signed_labels(&data.y)?;
    let teacher_fit = train_svm(x_star, &data.y, &config.teacher_config())?;
    let margins = compute_transfer_margins(&teacher_fit.model, x_star, &data.y, config.epsilon)?;
    let student_fit = train_student(
        &data.x,
        &data.y,
        &margins,
        config.c_orig,
        config.student_bias,
        &config.solver,
    )
    .map_err(|e| {
        let ctx = |m: String| format!("student stage failed ({}): {m}", margins.summary());
        match e {
            Error::Solver(m) => Error::Solver(ctx(m)),
            Error::InvalidArgument(m) => Error::InvalidArgument(ctx(m)),
            Error::Data(m) => Error::Data(ctx(m)),
            other => other,
        }
    })?;
    Ok(MarginTransferFit {
        student: student_fit.model.clone(),
        margins,
        teacher: teacher_fit.model.clone(),
        student_fit,
        teacher_fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_examples() {
        let teacher = LinearModel { w: vec![1.0], b: 0.0 };
        let xs = Matrix::from_rows(&[[3.0], [-5.0], [0.05]]).unwrap();
        let m = compute_transfer_margins(&teacher, &xs, &[1, 1, 1], 0.1).unwrap();
        assert_eq!(m.rho, vec![3.0, 0.1, 0.1]);

        let xs = Matrix::from_rows(&[[-2.0]]).unwrap();
        let m = compute_transfer_margins(&teacher, &xs, &[-1], 0.1).unwrap();
        assert_eq!(m.rho, vec![2.0]);

        let xs = Matrix::from_rows(&[[-1.0], [1.0], [-3.0]]).unwrap();
        let m = compute_transfer_margins(&teacher, &xs, &[1, -1, 1], 0.25).unwrap();
        assert_eq!(m.rho, vec![0.25; 3]);
    }

    #[test]
    fn epsilon_must_be_positive() {
        assert!(MarginVector::threshold(&[1.0], 0.0).is_err());
        assert!(MarginVector::from_values(vec![0.05], 0.1).is_err());
        assert!(MarginVector::from_values(vec![1.0], 0.1).is_ok());
    }

    #[test]
    fn default_epsilon() {
        assert_eq!(MarginTransferConfig::default().epsilon, 0.1);
    }

    #[test]
    fn hard_samples_cost_less() {
        let m = MarginVector::threshold(&[-4.0, 0.5, 3.0], 0.1).unwrap();
        let costs: Vec<f64> = m.rho.iter().map(|r| 2.0 * r).collect();
        assert!(costs[0] < costs[1] && costs[0] < costs[2]);
    }

    #[test]
    fn requires_privileged_block() {
        let d = Dataset::new(Matrix::from_rows(&[[1.0], [-1.0]]).unwrap(), None, vec![1, -1]).unwrap();
        assert!(train_margin_transfer(&d, &MarginTransferConfig::default()).is_err());
    }
}
