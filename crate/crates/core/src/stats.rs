//! Evaluation metrics and the two significance/correlation analyses used to
//! compare methods: the paired Wilcoxon signed-rank test and Kendall's tau-b.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

fn check_same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::InvalidArgument(format!("length mismatch: {a} vs {b}")));
    }
    Ok(())
}

/// Fraction of positions where the labels agree.
pub fn accuracy(predicted: &[i64], truth: &[i64]) -> Result<f64> {
    check_same_len(predicted.len(), truth.len())?;
    if truth.is_empty() {
        return Err(Error::InvalidArgument("accuracy of an empty set".into()));
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Sample mean and standard error of the mean (n − 1 denominator).
pub fn mean_stderr(values: &[f64]) -> Result<(f64, f64)> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "standard error needs at least 2 values, got {n}"
        )));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok((mean, (var / n as f64).sqrt()))
}

/// Effective sample sizes up to this use the exact null distribution.
pub const WILCOXON_EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub p_value: f64,
    pub reject: bool,
    /// Sum of ranks of the positive differences.
    pub w_plus: f64,
    /// Number of non-zero differences.
    pub n_effective: usize,
    pub exact: bool,
}

/// Ranks of `|d|` (1-based), doubled so that averaged tie ranks stay integral.
fn doubled_ranks(d: &[f64]) -> (Vec<u64>, Vec<u64>) {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].abs().total_cmp(&d[j].abs()));
    let mut ranks = vec![0u64; n];
    let mut tie_sizes = Vec::new();
    let mut k = 0;
    while k < n {
        let mut e = k;
        while e + 1 < n && d[order[e + 1]].abs() == d[order[k]].abs() {
            e += 1;
        }
        let twice = (k + e + 2) as u64;
        for &i in &order[k..=e] {
            ranks[i] = twice;
        }
        tie_sizes.push((e - k + 1) as u64);
        k = e + 1;
    }
    (ranks, tie_sizes)
}

/// Two-sided paired signed-rank test on `a − b`. Zero differences are
/// dropped and tied magnitudes share the average rank. Small samples use the
/// exact permutation distribution, larger ones the normal approximation with
/// tie and continuity corrections.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], alpha: f64) -> Result<WilcoxonResult> {
    check_same_len(a.len(), b.len())?;
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite observation".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            p_value: 1.0,
            reject: false,
            w_plus: 0.0,
            n_effective: 0,
            exact: true,
        });
    }
    let (ranks, ties) = doubled_ranks(&d);
    let w2: u64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| ranks[i]).sum();
    let w_plus = w2 as f64 / 2.0;

    let (p_value, exact) = if n <= WILCOXON_EXACT_MAX_N {
        // counts[s] = number of sign patterns whose doubled positive-rank sum is s
        let total: u64 = ranks.iter().sum();
        let mut counts = vec![0u64; total as usize + 1];
        counts[0] = 1;
        let mut reach = 0usize;
        for &r in &ranks {
            let r = r as usize;
            for s in (0..=reach).rev() {
                if counts[s] > 0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let w2 = w2 as usize;
        let le: u64 = counts[..=w2].iter().sum();
        let ge: u64 = counts[w2..].iter().sum();
        let patterns = 1u64 << n;
        ((2.0 * le.min(ge) as f64 / patterns as f64).min(1.0), true)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
        if var <= 0.0 {
            (1.0, false)
        } else {
            let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
            (erfc(z / std::f64::consts::SQRT_2).min(1.0), false)
        }
    };
    Ok(WilcoxonResult {
        p_value,
        reject: p_value < alpha,
        w_plus,
        n_effective: n,
        exact,
    })
}

/// Kendall rank correlation, or `Degenerate` when either input is constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Tau {
    Value(f64),
    Degenerate,
}

impl Tau {
    pub fn value(self) -> Option<f64> {
        match self {
            Tau::Value(v) => Some(v),
            Tau::Degenerate => None,
        }
    }
}

/// Count of tied pairs within runs of equal keys in a sorted sequence.
fn tied_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0;
    let mut run = 1u64;
    for k in 1..=sorted.len() {
        if k < sorted.len() && sorted[k] == sorted[k - 1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total
}

/// Merge sort returning the number of inversions.
fn sort_counting_swaps(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        sort_counting_swaps(l, bl) + sort_counting_swaps(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    let k = k + mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Tau-b in O(n log n) (Knight's algorithm). Without ties it equals tau-a.
pub fn kendall_tau(u: &[f64], v: &[f64]) -> Result<Tau> {
    check_same_len(u.len(), v.len())?;
    let n = u.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("kendall tau needs n >= 2, got {n}")));
    }
    if u.iter().chain(v).any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("NaN in rank correlation input".into()));
    }
    let mut pairs: Vec<(f64, f64)> = u.iter().copied().zip(v.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let us: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let tie_u = tied_pairs(&us);
    let tie_joint = tied_pairs(&pairs);
    let mut vs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; n];
    let swaps = sort_counting_swaps(&mut vs, &mut buf);
    let tie_v = tied_pairs(&vs);

    let n0 = (n * (n - 1) / 2) as i64;
    let (tie_u, tie_v, tie_joint, swaps) = (tie_u as i64, tie_v as i64, tie_joint as i64, swaps as i64);
    let net = n0 - tie_u - tie_v + tie_joint - 2 * swaps;
    let denom = ((n0 - tie_u) as f64) * ((n0 - tie_v) as f64);
    if denom == 0.0 {
        return Ok(Tau::Degenerate);
    }
    Ok(Tau::Value(net as f64 / denom.sqrt()))
}

/// Rank agreement between two per-sample easiness signals, e.g. teacher
/// margins against student margins or against human scores.
pub fn easiness_correlation(margins_a: &[f64], margins_b: &[f64]) -> Result<Tau> {
    kendall_tau(margins_a, margins_b)
}
