//! Cross-validated grid search. LUPI methods search the Cartesian product of
//! an original-space and a privileged-space grid; the winner is the grid
//! point with the highest mean validation accuracy over repeated stratified
//! k-fold partitions.

use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Normalization, Space};
use crate::error::{Error, Result};
use crate::method::{fit, GridPoint, Method, TrainSettings};
use crate::par;
use crate::rng;
use crate::stats::accuracy;

/// Seven decades 1e-3 … 1e3.
pub const WIDE_GRID: [f64; 7] = [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3];
/// Six decades 1 … 1e5, for L1-normalized original features.
pub const L1_ORIGINAL_GRID: [f64; 6] = [1.0, 1e1, 1e2, 1e3, 1e4, 1e5];

/// Default regularization grid. Unnormalized data uses the L2 grid.
pub fn grid_for(normalization: Normalization, space: Space) -> Vec<f64> {
    match (normalization, space) {
        (Normalization::L1, Space::Original) => L1_ORIGINAL_GRID.to_vec(),
        _ => WIDE_GRID.to_vec(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvGrid {
    pub orig_values: Vec<f64>,
    /// Empty for methods without a privileged-space parameter.
    pub priv_values: Vec<f64>,
}

impl CvGrid {
    pub fn new(orig_values: Vec<f64>, priv_values: Vec<f64>) -> Result<Self> {
        let grid = Self {
            orig_values,
            priv_values,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn single(orig_values: Vec<f64>) -> Result<Self> {
        Self::new(orig_values, Vec::new())
    }

    pub fn validate(&self) -> Result<()> {
        if self.orig_values.is_empty() {
            return Err(Error::InvalidArgument("grid has no original-space values".into()));
        }
        for (name, vals) in [("original", &self.orig_values), ("privileged", &self.priv_values)] {
            if vals.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidArgument(format!("{name} grid values must be positive")));
            }
            if vals.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(format!("{name} grid must be strictly increasing")));
            }
        }
        Ok(())
    }

    /// Grid points in evaluation and tie-break order: original value outer,
    /// privileged value inner, both ascending.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &c in &self.orig_values {
            if self.priv_values.is_empty() {
                out.push(GridPoint::single(c));
            } else {
                out.extend(self.priv_values.iter().map(|&p| GridPoint::pair(c, p)));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvPlan {
    pub outer_repeats: usize,
    pub folds: usize,
    pub seed: u64,
}

impl CvPlan {
    /// 5 repetitions of 5-fold CV.
    pub fn binary(seed: u64) -> Self {
        Self {
            outer_repeats: 5,
            folds: 5,
            seed,
        }
    }

    /// A single 5-fold CV.
    pub fn multiclass(seed: u64) -> Self {
        Self {
            outer_repeats: 1,
            folds: 5,
            seed,
        }
    }

    pub fn for_data(data: &Dataset, seed: u64) -> Self {
        if data.is_binary() {
            Self::binary(seed)
        } else {
            Self::multiclass(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 folds, got {}", self.folds)));
        }
        if self.outer_repeats == 0 {
            return Err(Error::InvalidArgument("need at least one CV repetition".into()));
        }
        Ok(())
    }
}

/// One train/validation partition of the training set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub repeat: usize,
    pub fold: usize,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// All partitions of a plan. Depends only on the data labels and the seed.
pub fn cv_folds(data: &Dataset, plan: &CvPlan) -> Result<Vec<Fold>> {
    plan.validate()?;
    let classes = data.class_indices();
    if let Some((label, idx)) = classes.iter().find(|(_, idx)| idx.len() < plan.folds) {
        return Err(Error::Data(format!(
            "class {label} has {} samples, fewer than {} folds",
            idx.len(),
            plan.folds
        )));
    }
    let mut out = Vec::with_capacity(plan.outer_repeats * plan.folds);
    for repeat in 0..plan.outer_repeats {
        let mut r = rng::rng_for(plan.seed, repeat as u64);
        let mut assignment = vec![0usize; data.len()];
        let mut next = 0usize;
        for idx in classes.values() {
            let mut idx = idx.clone();
            idx.shuffle(&mut r);
            for i in idx {
                assignment[i] = next % plan.folds;
                next += 1;
            }
        }
        for fold in 0..plan.folds {
            let (validation, train): (Vec<usize>, Vec<usize>) =
                (0..data.len()).partition(|&i| assignment[i] == fold);
            out.push(Fold {
                repeat,
                fold,
                train,
                validation,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub point: GridPoint,
    /// Validation accuracies, repeat-major.
    pub scores: Vec<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvTable {
    pub outer_repeats: usize,
    pub folds: usize,
    pub rows: Vec<CvRow>,
}

impl CvTable {
    /// Long-format CSV: one line per (grid point, repeat, fold).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "c,privileged,repeat,fold,accuracy")?;
        for row in &self.rows {
            let p = row.point.privileged.map(|v| format!("{v:?}")).unwrap_or_default();
            for (k, acc) in row.scores.iter().enumerate() {
                writeln!(
                    out,
                    "{:?},{p},{},{},{acc:?}",
                    row.point.c,
                    k / self.folds,
                    k % self.folds
                )?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub best: GridPoint,
    pub best_mean: f64,
    pub table: CvTable,
}

/// Evaluate every grid point on every fold and pick the best mean accuracy.
/// Ties go to the smaller original value, then the smaller privileged value.
pub fn cross_validate(
    train: &Dataset,
    method: Method,
    grid: &CvGrid,
    plan: &CvPlan,
    settings: &TrainSettings,
) -> Result<CvResult> {
    grid.validate()?;
    if method.is_lupi() && grid.priv_values.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{method} needs a privileged-space grid"
        )));
    }
    let grid = if method.is_lupi() {
        grid.clone()
    } else {
        CvGrid::single(grid.orig_values.clone())?
    };
    let folds = cv_folds(train, plan)?;
    let points = grid.points();
    let subsets: Vec<(Dataset, Dataset)> = folds
        .iter()
        .map(|f| (train.subset(&f.train), train.subset(&f.validation)))
        .collect();

    let n_folds = folds.len();
    let scores = par::map_range(points.len() * n_folds, |task| -> Result<f64> {
        let point = &points[task / n_folds];
        let (fit_set, valid_set) = &subsets[task % n_folds];
        let model = fit(method, fit_set, point, settings)?;
        accuracy(&model.predict(valid_set)?, &valid_set.y)
    });

    let mut rows = Vec::with_capacity(points.len());
    for (p, point) in points.iter().enumerate() {
        let row = scores[p * n_folds..(p + 1) * n_folds]
            .iter()
            .map(|s| s.as_ref().copied().map_err(|e| e.context(format!("{method} at {point}"))))
            .collect::<Result<Vec<f64>>>()?;
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        rows.push(CvRow {
            point: *point,
            scores: row,
            mean,
        });
    }
    let mut best = 0;
    for (k, row) in rows.iter().enumerate() {
        if row.mean > rows[best].mean {
            best = k;
        }
    }
    Ok(CvResult {
        best: rows[best].point,
        best_mean: rows[best].mean,
        table: CvTable {
            outer_repeats: plan.outer_repeats,
            folds: plan.folds,
            rows,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn protocol_grids() {
        let wide = grid_for(Normalization::L2, Space::Original);
        assert_eq!(wide, vec![1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3]);
        assert_eq!(grid_for(Normalization::L1, Space::Original), vec![1.0, 1e1, 1e2, 1e3, 1e4, 1e5]);
        assert_eq!(grid_for(Normalization::L1, Space::Privileged), wide);
        assert_eq!(grid_for(Normalization::L2, Space::Privileged), wide);
    }

    #[test]
    fn plans() {
        let b = CvPlan::binary(0);
        assert_eq!((b.outer_repeats, b.folds), (5, 5));
        let m = CvPlan::multiclass(0);
        assert_eq!((m.outer_repeats, m.folds), (1, 5));
        assert!(CvPlan { folds: 1, ..b }.validate().is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(CvGrid::single(vec![]).is_err());
        assert!(CvGrid::single(vec![1.0, 1.0]).is_err());
        assert!(CvGrid::single(vec![-1.0]).is_err());
        assert!(CvGrid::new(vec![1.0], vec![2.0, 1.0]).is_err());
        let g = CvGrid::new(vec![1.0, 2.0], vec![3.0, 4.0, 5.0]).unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1], GridPoint::pair(1.0, 4.0));
    }
}
