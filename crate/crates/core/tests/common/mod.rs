//! Shared generators and independent oracles for the integration tests.
#![allow(dead_code)]

use lupi_core::matrix::{dot, Matrix};
use lupi_core::qp::QpProblem;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

pub fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| normal(r)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// A random convex QP together with a strictly feasible point and a basis of
/// the null space of its equality constraints.
pub struct RandomQp {
    pub problem: QpProblem,
    pub interior: Vec<f64>,
    pub null_basis: Vec<Vec<f64>>,
}

/// Random QP with n ≤ 8 variables and m ≤ 10 inequalities. Some instances
/// have a rank-deficient P (bounded by an explicit box) and some carry
/// equality constraints.
pub fn random_qp(r: &mut ChaCha8Rng) -> RandomQp {
    let n = r.gen_range(1..=8);
    let singular = n <= 5 && r.gen_bool(0.25);
    let rank = if singular { r.gen_range(0..n) } else { n };
    let l = random_matrix(r, n, rank);
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            p[i][j] = dot(l.row(i), l.row(j));
        }
        if !singular {
            p[i][i] += 0.1;
        }
    }
    let q: Vec<f64> = (0..n).map(|_| 2.0 * normal(r)).collect();
    let x0: Vec<f64> = (0..n).map(|_| normal(r)).collect();

    let mut g_rows: Vec<Vec<f64>> = Vec::new();
    let mut h = Vec::new();
    if singular {
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut row = vec![0.0; n];
                row[i] = sign;
                h.push(sign * x0[i] + 3.0);
                g_rows.push(row);
            }
        }
    }
    let extra = r.gen_range(0..=(10 - g_rows.len()));
    for _ in 0..extra {
        let row: Vec<f64> = (0..n).map(|_| normal(r)).collect();
        h.push(dot(&row, &x0) + r.gen_range(0.05..1.0));
        g_rows.push(row);
    }
    let g = if g_rows.is_empty() {
        Matrix::zeros(0, n)
    } else {
        Matrix::from_rows(&g_rows).unwrap()
    };
    let mut problem = QpProblem::new(Matrix::from_rows(&p).unwrap(), q).with_inequalities(g, h);

    let n_eq = if n >= 3 && r.gen_bool(0.3) { r.gen_range(1..=2) } else { 0 };
    let mut null_basis: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    if n_eq > 0 {
        let a = random_matrix(r, n_eq, n);
        let b: Vec<f64> = a.iter_rows().map(|row| dot(row, &x0)).collect();
        let am = DMatrix::from_row_slice(n_eq, n, a.as_slice());
        // Null space from the full SVD of Aᵀ A.
        let svd = (am.transpose() * &am).svd(true, true);
        let v = svd.v_t.unwrap().transpose();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| svd.singular_values[i].partial_cmp(&svd.singular_values[j]).unwrap());
        null_basis = order[..n - n_eq]
            .iter()
            .map(|&k| v.column(k).iter().copied().collect())
            .collect();
        problem = problem.with_equalities(a, b);
    }
    RandomQp {
        problem,
        interior: x0,
        null_basis,
    }
}

/// Rejection-sample feasible points in a small box around the interior
/// point (restricted to the equality null space) and return the lowest
/// objective seen.
pub fn best_sampled_objective(r: &mut ChaCha8Rng, rq: &RandomQp, samples: usize) -> f64 {
    let n = rq.problem.n_vars();
    let mut best = f64::INFINITY;
    let mut accepted = 0;
    let mut tries = 0;
    while accepted < samples && tries < samples * 50 {
        tries += 1;
        let radius = if tries % 2 == 0 { 1.0 } else { 0.2 };
        let mut x = rq.interior.clone();
        for dir in &rq.null_basis {
            let t = r.gen_range(-radius..radius);
            for i in 0..n {
                x[i] += t * dir[i];
            }
        }
        if rq.problem.max_ineq_violation(&x) <= 0.0 {
            accepted += 1;
            best = best.min(rq.problem.objective(&x));
        }
    }
    best
}

/// Primal QP of the weighted soft-margin SVM over variables `(w, ξ)`:
/// `½‖w‖² + Σ costᵢ ξᵢ` subject to `yᵢ⟨w, xᵢ⟩ ≥ marginᵢ − ξᵢ`, `ξᵢ ≥ 0`.
/// With `bias`, a constant-1 feature is appended to every sample and
/// regularized like the other weights.
pub fn svm_primal_qp(x: &Matrix, y: &[f64], cost: &[f64], margin: &[f64], bias: bool) -> QpProblem {
    let n = x.rows();
    let d = x.cols() + usize::from(bias);
    let nv = d + n;
    let mut p = Matrix::zeros(nv, nv);
    for j in 0..d {
        p.row_mut(j)[j] = 1.0;
    }
    let mut q = vec![0.0; nv];
    q[d..].copy_from_slice(cost);
    let mut g = Matrix::zeros(2 * n, nv);
    let mut h = vec![0.0; 2 * n];
    for i in 0..n {
        let row = g.row_mut(i);
        for j in 0..x.cols() {
            row[j] = -y[i] * x.row(i)[j];
        }
        if bias {
            row[d - 1] = -y[i];
        }
        row[d + i] = -1.0;
        h[i] = -margin[i];
        g.row_mut(n + i)[d + i] = -1.0;
    }
    QpProblem::new(p, q).with_inequalities(g, h)
}

pub fn hinge_primal(w: &[f64], b: f64, x: &Matrix, y: &[f64], cost: &[f64], margin: &[f64]) -> f64 {
    let reg = 0.5 * (dot(w, w) + b * b);
    let loss: f64 = x
        .iter_rows()
        .enumerate()
        .map(|(i, row)| cost[i] * (margin[i] - y[i] * (dot(w, row) + b)).max(0.0))
        .sum();
    reg + loss
}

/// Random binary problem, both classes present.
pub fn random_binary(r: &mut ChaCha8Rng, n: usize, d: usize) -> (Matrix, Vec<i64>) {
    let x = random_matrix(r, n, d);
    let dir: Vec<f64> = (0..d).map(|_| normal(r)).collect();
    let mut y: Vec<i64> = x
        .iter_rows()
        .map(|row| if dot(row, &dir) + 0.5 * normal(r) >= 0.0 { 1 } else { -1 })
        .collect();
    y[0] = 1;
    if n > 1 {
        y[1] = -1;
    }
    (x, y)
}

pub fn signed(y: &[i64]) -> Vec<f64> {
    y.iter().map(|&l| l as f64).collect()
}

/// O(n²) Kendall tau-b by direct pair counting. `None` when either vector is
/// constant.
pub fn kendall_pairs(u: &[f64], v: &[f64]) -> Option<f64> {
    let n = u.len();
    let (mut conc, mut disc, mut tie_u, mut tie_v) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in (i + 1)..n {
            let du = u[i] - u[j];
            let dv = v[i] - v[j];
            if du == 0.0 {
                tie_u += 1;
            }
            if dv == 0.0 {
                tie_v += 1;
            }
            if du != 0.0 && dv != 0.0 {
                if (du > 0.0) == (dv > 0.0) {
                    conc += 1;
                } else {
                    disc += 1;
                }
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let denom = ((n0 - tie_u) as f64) * ((n0 - tie_v) as f64);
    if denom == 0.0 {
        None
    } else {
        Some((conc - disc) as f64 / denom.sqrt())
    }
}

/// Two-sided exact signed-rank p-value by enumerating all 2ⁿ sign patterns
/// of the non-zero differences. Ranks are averaged over ties and doubled to
/// stay integral, so the comparison is exact.
pub fn wilcoxon_enumerate(diffs: &[f64]) -> f64 {
    let d: Vec<f64> = diffs.iter().copied().filter(|v| *v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return 1.0;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].abs().partial_cmp(&d[j].abs()).unwrap());
    let mut twice_rank = vec![0u64; n];
    let mut k = 0;
    while k < n {
        let mut e = k;
        while e + 1 < n && d[order[e + 1]].abs() == d[order[k]].abs() {
            e += 1;
        }
        // average of ranks k+1..=e+1, doubled
        let r2 = (k + 1 + e + 1) as u64;
        for t in k..=e {
            twice_rank[order[t]] = r2;
        }
        k = e + 1;
    }
    let observed: u64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| twice_rank[i]).sum();
    let total = 1u64 << n;
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0..total {
        let s: u64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| twice_rank[i]).sum();
        if s <= observed {
            le += 1;
        }
        if s >= observed {
            ge += 1;
        }
    }
    (2.0 * le.min(ge) as f64 / total as f64).min(1.0)
}
