//! Dense convex quadratic programming.
//!
//! Solves
//!
//! ```text
//! minimize    ½ xᵀPx + qᵀx
//! subject to  Gx ≤ h,  Ax = b
//! ```
//!
//! with a primal-dual interior-point method using Mehrotra's
//! predictor-corrector steps. Each Newton system is reduced to the
//! `(n + p)`-dimensional KKT matrix `[[P + GᵀWG, Aᵀ], [A, 0]]` with
//! `W = diag(λ / s)` and factored with dense LU.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A convex QP in standard inequality/equality form.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub p: Matrix,
    pub q: Vec<f64>,
    pub g: Matrix,
    pub h: Vec<f64>,
    pub a: Option<Matrix>,
    pub b: Vec<f64>,
}

impl QpProblem {
    /// Unconstrained problem over `q.len()` variables.
    pub fn new(p: Matrix, q: Vec<f64>) -> Self {
        let n = q.len();
        Self {
            p,
            q,
            g: Matrix::zeros(0, n),
            h: Vec::new(),
            a: None,
            b: Vec::new(),
        }
    }

    pub fn with_inequalities(mut self, g: Matrix, h: Vec<f64>) -> Self {
        self.g = g;
        self.h = h;
        self
    }

    pub fn with_equalities(mut self, a: Matrix, b: Vec<f64>) -> Self {
        self.a = Some(a);
        self.b = b;
        self
    }

    pub fn n_vars(&self) -> usize {
        self.q.len()
    }

    pub fn n_ineq(&self) -> usize {
        self.h.len()
    }

    pub fn n_eq(&self) -> usize {
        self.b.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut quad = 0.0;
        for i in 0..x.len() {
            let row = self.p.row(i);
            quad += x[i] * row.iter().zip(x).map(|(p, xj)| p * xj).sum::<f64>();
        }
        0.5 * quad + self.q.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Largest violation of `Gx ≤ h` (zero or negative when satisfied).
    pub fn max_ineq_violation(&self, x: &[f64]) -> f64 {
        self.g
            .iter_rows()
            .zip(&self.h)
            .map(|(row, h)| crate::matrix::dot(row, x) - h)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if n == 0 {
            return bad("QP has no variables".into());
        }
        if self.p.rows() != n || self.p.cols() != n {
            return bad(format!(
                "P is {}x{}, expected {n}x{n}",
                self.p.rows(),
                self.p.cols()
            ));
        }
        if self.g.cols() != n || self.g.rows() != self.h.len() {
            return bad(format!(
                "G is {}x{} with {} bounds, expected m x {n}",
                self.g.rows(),
                self.g.cols(),
                self.h.len()
            ));
        }
        match &self.a {
            Some(a) if a.cols() != n || a.rows() != self.b.len() => {
                return bad(format!(
                    "A is {}x{} with {} right-hand sides, expected p x {n}",
                    a.rows(),
                    a.cols(),
                    self.b.len()
                ))
            }
            None if !self.b.is_empty() => return bad("b given without A".into()),
            _ => {}
        }
        let finite = self.p.is_finite()
            && self.g.is_finite()
            && self.a.as_ref().map_or(true, Matrix::is_finite)
            && self.q.iter().chain(&self.h).chain(&self.b).all(|v| v.is_finite());
        if !finite {
            return bad("QP data must be finite".into());
        }
        for i in 0..n {
            for j in 0..i {
                if (self.p.row(i)[j] - self.p.row(j)[i]).abs() > 1e-10 {
                    return bad(format!("P is not symmetric at ({i}, {j})"));
                }
            }
        }
        if n <= PSD_CHECK_MAX_DIM {
            let min_eig = to_dmatrix(&self.p)
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if min_eig < -1e-8 {
                return bad(format!("P has negative eigenvalue {min_eig:e}"));
            }
        }
        Ok(())
    }
}

/// Problems up to this size get an eigenvalue check of P.
const PSD_CHECK_MAX_DIM: usize = 64;

/// JSON layout of a QP: nested row arrays, with the constraint blocks
/// optional.
///
/// ```json
/// {"p": [[1, 0], [0, 1]], "q": [-1, -1], "g": [[-1, 0]], "h": [-2], "a": [[1, 1]], "b": [1]}
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QpDocument {
    pub p: Vec<Vec<f64>>,
    pub q: Vec<f64>,
    #[serde(default)]
    pub g: Vec<Vec<f64>>,
    #[serde(default)]
    pub h: Vec<f64>,
    #[serde(default)]
    pub a: Vec<Vec<f64>>,
    #[serde(default)]
    pub b: Vec<f64>,
}

impl TryFrom<QpDocument> for QpProblem {
    type Error = Error;

    fn try_from(doc: QpDocument) -> Result<Self> {
        let n = doc.q.len();
        let mat = |rows: &[Vec<f64>]| -> Result<Matrix> {
            if rows.is_empty() {
                Ok(Matrix::zeros(0, n))
            } else {
                Matrix::from_rows(rows)
            }
        };
        let mut qp = QpProblem::new(mat(&doc.p)?, doc.q).with_inequalities(mat(&doc.g)?, doc.h);
        if !doc.a.is_empty() || !doc.b.is_empty() {
            qp = qp.with_equalities(mat(&doc.a)?, doc.b);
        }
        Ok(qp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpSolution {
    pub x: Vec<f64>,
    /// Multipliers of `Gx ≤ h`, all non-negative.
    pub lambda_ineq: Vec<f64>,
    /// Multipliers of `Ax = b`.
    pub nu_eq: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub status: QpStatus,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

/// Separate KKT residual terms of a candidate `(x, λ, ν)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// `max(Gx − h)` clipped at zero, and `‖Ax − b‖∞`.
    pub primal: f64,
    /// `max(−λ)` clipped at zero.
    pub dual: f64,
    /// `‖Px + q + Gᵀλ + Aᵀν‖∞`.
    pub stationarity: f64,
    /// `max |λᵢ (Gx − h)ᵢ|`.
    pub complementarity: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.primal
            .max(self.dual)
            .max(self.stationarity)
            .max(self.complementarity)
    }
}

/// Evaluate the KKT conditions at a point, independently of how it was found.
pub fn kkt_report(problem: &QpProblem, x: &[f64], lambda: &[f64], nu: &[f64]) -> KktReport {
    let n = problem.n_vars();
    let mut grad: Vec<f64> = (0..n)
        .map(|i| crate::matrix::dot(problem.p.row(i), x) + problem.q[i])
        .collect();
    let mut primal: f64 = 0.0;
    let mut complementarity: f64 = 0.0;
    for (k, row) in problem.g.iter_rows().enumerate() {
        let slack = crate::matrix::dot(row, x) - problem.h[k];
        primal = primal.max(slack);
        complementarity = complementarity.max((lambda[k] * slack).abs());
        crate::matrix::axpy(lambda[k], row, &mut grad);
    }
    if let Some(a) = &problem.a {
        for (k, row) in a.iter_rows().enumerate() {
            primal = primal.max((crate::matrix::dot(row, x) - problem.b[k]).abs());
            crate::matrix::axpy(nu[k], row, &mut grad);
        }
    }
    KktReport {
        primal,
        dual: lambda.iter().fold(0.0_f64, |m, &l| m.max(-l)),
        stationarity: grad.iter().fold(0.0_f64, |m, g| m.max(g.abs())),
        complementarity,
    }
}

fn to_dmatrix(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// Added to the P block of every KKT matrix. Absorbs zero-curvature
/// directions such as unregularized bias terms.
const P_REGULARIZATION: f64 = 1e-10;
/// Subtracted on the equality block so redundant equalities stay factorable.
const EQ_REGULARIZATION: f64 = 1e-12;
const STEP_FRACTION: f64 = 0.99;
/// Infeasibility test: window length and the required residual reduction.
const STALL_WINDOW: usize = 10;
const STALL_FACTOR: f64 = 0.5;

struct Kkt {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

impl Kkt {
    fn factor(p: &DMatrix<f64>, g: &DMatrix<f64>, a: Option<&DMatrix<f64>>, w: &DVector<f64>) -> Option<Self> {
        let n = p.nrows();
        let n_eq = a.map_or(0, |a| a.nrows());
        let mut reg = P_REGULARIZATION;
        // G' diag(w) G
        let mut wg = g.clone();
        for (k, mut row) in wg.row_iter_mut().enumerate() {
            row *= w[k];
        }
        let gwg = g.transpose() * wg;
        for _ in 0..6 {
            let mut k = DMatrix::zeros(n + n_eq, n + n_eq);
            k.view_mut((0, 0), (n, n)).copy_from(&(p + &gwg));
            for i in 0..n {
                k[(i, i)] += reg;
            }
            if let Some(a) = a {
                k.view_mut((n, 0), (n_eq, n)).copy_from(a);
                k.view_mut((0, n), (n, n_eq)).copy_from(&a.transpose());
                for i in 0..n_eq {
                    k[(n + i, n + i)] = -EQ_REGULARIZATION;
                }
            }
            let lu = k.lu();
            if lu.is_invertible() {
                return Some(Self { lu, n });
            }
            reg *= 100.0;
        }
        None
    }

    fn solve(&self, rx: DVector<f64>, ry: DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
        let mut rhs = DVector::zeros(self.n + ry.len());
        rhs.rows_mut(0, self.n).copy_from(&rx);
        rhs.rows_mut(self.n, ry.len()).copy_from(&ry);
        let sol = self.lu.solve(&rhs)?;
        if !sol.iter().all(|v| v.is_finite()) {
            return None;
        }
        Some((
            sol.rows(0, self.n).into_owned(),
            sol.rows(self.n, ry.len()).into_owned(),
        ))
    }
}

/// Largest step in (0, 1] keeping `v + α dv ≥ 0`.
fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(vi, di)| -vi / di)
        .fold(1.0, f64::min)
}

pub fn solve_qp(problem: &QpProblem, options: &QpOptions) -> Result<QpSolution> {
    problem.validate()?;
    if !(options.tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let m = problem.n_ineq();
    let p = to_dmatrix(&problem.p);
    let g = to_dmatrix(&problem.g);
    let a = problem.a.as_ref().map(to_dmatrix);
    let q = DVector::from_column_slice(&problem.q);
    let h = DVector::from_column_slice(&problem.h);
    let b = DVector::from_column_slice(&problem.b);
    let gt = g.transpose();
    let at = a.as_ref().map(|a| a.transpose());

    let solver_err = || Error::Solver("KKT system could not be factored".into());

    // Starting point: least-squares fit of the constraints with unit weights,
    // then shift slacks and multipliers into the positive orthant.
    let init = Kkt::factor(&p, &g, a.as_ref(), &DVector::from_element(m, 1.0)).ok_or_else(solver_err)?;
    let (mut x, mut y) = init
        .solve(-&q + &gt * &h, b.clone())
        .ok_or_else(solver_err)?;
    let mut s = &h - &g * &x;
    let mut z = -s.clone();
    if m > 0 {
        let shift = |v: &mut DVector<f64>| {
            let lo = v.min();
            if lo <= 0.0 {
                v.add_scalar_mut(1.0 - lo);
            }
        };
        shift(&mut s);
        shift(&mut z);
    }

    let mut best: Option<QpSolution> = None;
    let mut history: Vec<f64> = Vec::new();
    let mut iterations = 0;

    let snapshot = |x: &DVector<f64>, z: &DVector<f64>, y: &DVector<f64>, status, iterations| {
        let xs: Vec<f64> = x.iter().copied().collect();
        let lambda: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
        let nu: Vec<f64> = y.iter().copied().collect();
        let kkt = kkt_report(problem, &xs, &lambda, &nu);
        QpSolution {
            objective: problem.objective(&xs),
            x: xs,
            lambda_ineq: lambda,
            nu_eq: nu,
            kkt_residual: kkt.max(),
            status,
            iterations,
        }
    };

    loop {
        let current = snapshot(&x, &z, &y, QpStatus::Optimal, iterations);
        let residual = current.kkt_residual;
        if best.as_ref().map_or(true, |b| residual < b.kkt_residual) {
            best = Some(current.clone());
        }
        if residual <= options.tol {
            return Ok(current);
        }
        let primal_infeasibility = kkt_report(problem, &current.x, &current.lambda_ineq, &current.nu_eq).primal;
        history.push(residual);
        if history.len() > STALL_WINDOW {
            let before = history[history.len() - 1 - STALL_WINDOW];
            if residual > STALL_FACTOR * before && primal_infeasibility > options.tol.sqrt() {
                let mut out = best.unwrap_or(current);
                out.status = QpStatus::Infeasible;
                out.iterations = iterations;
                return Ok(out);
            }
        }
        if iterations >= options.max_iter {
            break;
        }
        iterations += 1;

        let mut rd = &p * &x + &q + &gt * &z;
        if let Some(at) = &at {
            rd += at * &y;
        }
        let re = match &a {
            Some(a) => a * &x - &b,
            None => DVector::zeros(0),
        };
        let ri = &g * &x + &s - &h;
        let mu = if m > 0 { s.dot(&z) / m as f64 } else { 0.0 };
        let w = z.component_div(&s);

        let Some(kkt) = Kkt::factor(&p, &g, a.as_ref(), &w) else {
            break;
        };
        // Newton direction for complementarity target `rc`:
        //   Z ds + S dz = -rc, ds = -ri - G dx, dz = (Z ri - rc)/S + W G dx.
        let direction = |rc: &DVector<f64>| -> Option<(DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>)> {
            let t = (z.component_mul(&ri) - rc).component_div(&s);
            let (dx, dy) = kkt.solve(-&rd - &gt * &t, -&re)?;
            let gdx = &g * &dx;
            let dz = &t + w.component_mul(&gdx);
            let ds = -&ri - gdx;
            Some((dx, dy, ds, dz))
        };

        let rc_aff = s.component_mul(&z);
        let Some((dx_a, _, ds_a, dz_a)) = direction(&rc_aff) else {
            break;
        };
        let step = if m > 0 {
            let alpha = max_step(&s, &ds_a).min(max_step(&z, &dz_a));
            let mu_aff = (&s + alpha * &ds_a).dot(&(&z + alpha * &dz_a)) / m as f64;
            let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);
            let rc = rc_aff + ds_a.component_mul(&dz_a) - DVector::from_element(m, sigma * mu);
            direction(&rc)
        } else {
            direction(&rc_aff).map(|(_, dy, ds, dz)| (dx_a.clone(), dy, ds, dz))
        };
        let Some((dx, dy, ds, dz)) = step else {
            break;
        };
        let alpha = if m > 0 {
            (STEP_FRACTION * max_step(&s, &ds).min(max_step(&z, &dz))).min(1.0)
        } else {
            1.0
        };
        if alpha < 1e-14 {
            break;
        }
        x += alpha * dx;
        y += alpha * dy;
        s += alpha * ds;
        z += alpha * dz;
    }

    let mut out = best.expect("at least one iterate evaluated");
    // A numerical breakdown far from feasibility is treated like a stall.
    let primal = kkt_report(problem, &out.x, &out.lambda_ineq, &out.nu_eq).primal;
    out.status = if iterations < options.max_iter && primal > options.tol.sqrt() {
        QpStatus::Infeasible
    } else {
        QpStatus::MaxIterations
    };
    out.iterations = iterations;
    Ok(out)
}
