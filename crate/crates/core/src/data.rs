//! Datasets: CSV ingestion, per-sample normalization, stratified splitting,
//! human easiness scores and a synthetic generator with controllable sample
//! easiness.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

/// Paired original/privileged samples with integer labels.
///
/// Binary tasks use labels in {-1, +1}; anything else is treated as a
/// multiclass task over the distinct label values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Matrix,
    pub x_star: Option<Matrix>,
    pub y: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Task {
    Binary,
    Multiclass(Vec<i64>),
}

impl Dataset {
    pub fn new(x: Matrix, x_star: Option<Matrix>, y: Vec<i64>) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::Data("dataset has no samples".into()));
        }
        if y.len() != x.rows() {
            return Err(Error::RowMismatch {
                left: "features".into(),
                left_rows: x.rows(),
                right: "labels".into(),
                right_rows: y.len(),
            });
        }
        if !x.is_finite() {
            return Err(Error::Data("non-finite feature value".into()));
        }
        if let Some(xs) = &x_star {
            if xs.rows() != x.rows() {
                return Err(Error::RowMismatch {
                    left: "features".into(),
                    left_rows: x.rows(),
                    right: "privileged".into(),
                    right_rows: xs.rows(),
                });
            }
            if !xs.is_finite() {
                return Err(Error::Data("non-finite privileged value".into()));
            }
        }
        Ok(Self { x, x_star, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn dim_star(&self) -> Option<usize> {
        self.x_star.as_ref().map(Matrix::cols)
    }

    pub fn privileged(&self) -> Result<&Matrix> {
        self.x_star
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("privileged features are required".into()))
    }

    /// Sorted distinct labels.
    pub fn classes(&self) -> Vec<i64> {
        let mut c = self.y.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn task(&self) -> Task {
        if self.y.iter().all(|&l| l == 1 || l == -1) {
            Task::Binary
        } else {
            Task::Multiclass(self.classes())
        }
    }

    pub fn is_binary(&self) -> bool {
        self.task() == Task::Binary
    }

    /// Labels as ±1 reals. Errors unless the task is binary.
    pub fn signed_labels(&self) -> Result<Vec<f64>> {
        signed_labels(&self.y)
    }

    /// Sample indices grouped by label, labels in ascending order.
    pub fn class_indices(&self) -> BTreeMap<i64, Vec<usize>> {
        let mut map: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (i, &l) in self.y.iter().enumerate() {
            map.entry(l).or_default().push(i);
        }
        map
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(idx),
            x_star: self.x_star.as_ref().map(|m| m.select_rows(idx)),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

/// Convert {-1, +1} labels to reals.
pub fn signed_labels(y: &[i64]) -> Result<Vec<f64>> {
    y.iter()
        .map(|&l| match l {
            1 => Ok(1.0),
            -1 => Ok(-1.0),
            other => Err(Error::Data(format!(
                "binary label must be -1 or +1, got {other}"
            ))),
        })
        .collect()
}

/// Where labels live when loading a dataset.
#[derive(Debug, Clone)]
pub enum LabelSource {
    /// Last column of the feature file.
    LastColumn,
    /// A separate single-column file.
    File(PathBuf),
}

fn parse_cell(s: &str) -> Option<f64> {
    let v: f64 = s.trim().parse().ok()?;
    v.is_finite().then_some(v)
}

/// Read a numeric CSV. A first row that does not parse as numbers is taken to
/// be a header. Returns the rows and the 1-based line number of each.
fn read_numeric_csv(path: &Path) -> Result<Vec<(usize, Vec<f64>)>> {
    let file = File::open(path).map_err(|source| Error::Io {
        file: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut rows = Vec::new();
    let mut width = None;
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            file: path.to_path_buf(),
            line: e.position().map_or(k + 1, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(k + 1, |p| p.line() as usize);
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let parsed: Option<Vec<f64>> = record.iter().map(parse_cell).collect();
        match parsed {
            Some(values) => {
                let w = *width.get_or_insert(values.len());
                if values.len() != w {
                    return Err(Error::Parse {
                        file: path.to_path_buf(),
                        line,
                        message: format!("expected {w} columns, found {}", values.len()),
                    });
                }
                rows.push((line, values));
            }
            None if k == 0 => {} // header
            None => {
                let bad = record
                    .iter()
                    .find(|c| parse_cell(c).is_none())
                    .unwrap_or_default();
                return Err(Error::Parse {
                    file: path.to_path_buf(),
                    line,
                    message: format!("non-numeric cell {bad:?}"),
                });
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            file: path.to_path_buf(),
            line: 1,
            message: "no data rows".into(),
        });
    }
    Ok(rows)
}

fn parse_label(path: &Path, line: usize, v: f64) -> Result<i64> {
    if v.fract() != 0.0 || v.abs() > 1e15 {
        return Err(Error::Parse {
            file: path.to_path_buf(),
            line,
            message: format!("invalid label value {v}: labels must be integers"),
        });
    }
    Ok(v as i64)
}

fn check_labels(path: &Path, lines: &[usize], y: &[i64]) -> Result<()> {
    let binary = y.iter().all(|&l| l == 1 || l == -1);
    if binary {
        return Ok(());
    }
    if let Some(k) = y.iter().position(|&l| l < 0) {
        return Err(Error::Parse {
            file: path.to_path_buf(),
            line: lines[k],
            message: format!(
                "invalid label value {}: use -1/+1 for binary or 0..K-1 for multiclass",
                y[k]
            ),
        });
    }
    Ok(())
}

/// Load original features, optional aligned privileged features and labels.
pub fn load_dataset(
    features: &Path,
    privileged: Option<&Path>,
    labels: &LabelSource,
) -> Result<Dataset> {
    let feat_rows = read_numeric_csv(features)?;
    let (x_rows, y, label_path, label_lines): (Vec<Vec<f64>>, Vec<i64>, PathBuf, Vec<usize>) =
        match labels {
            LabelSource::LastColumn => {
                let mut xs = Vec::with_capacity(feat_rows.len());
                let mut ys = Vec::with_capacity(feat_rows.len());
                let mut lines = Vec::with_capacity(feat_rows.len());
                for (line, mut row) in feat_rows {
                    let Some(label) = row.pop() else {
                        return Err(Error::Parse {
                            file: features.to_path_buf(),
                            line,
                            message: "missing label column".into(),
                        });
                    };
                    ys.push(parse_label(features, line, label)?);
                    xs.push(row);
                    lines.push(line);
                }
                (xs, ys, features.to_path_buf(), lines)
            }
            LabelSource::File(path) => {
                let label_rows = read_numeric_csv(path)?;
                if label_rows.len() != feat_rows.len() {
                    return Err(Error::RowMismatch {
                        left: features.display().to_string(),
                        left_rows: feat_rows.len(),
                        right: path.display().to_string(),
                        right_rows: label_rows.len(),
                    });
                }
                let mut ys = Vec::with_capacity(label_rows.len());
                let mut lines = Vec::with_capacity(label_rows.len());
                for (line, row) in &label_rows {
                    if row.len() != 1 {
                        return Err(Error::Parse {
                            file: path.clone(),
                            line: *line,
                            message: format!("label file must have one column, found {}", row.len()),
                        });
                    }
                    ys.push(parse_label(path, *line, row[0])?);
                    lines.push(*line);
                }
                (
                    feat_rows.into_iter().map(|(_, r)| r).collect(),
                    ys,
                    path.clone(),
                    lines,
                )
            }
        };
    check_labels(&label_path, &label_lines, &y)?;
    let x = Matrix::from_rows(&x_rows)?;
    let x_star = match privileged {
        Some(p) => {
            let rows = read_numeric_csv(p)?;
            if rows.len() != x.rows() {
                return Err(Error::RowMismatch {
                    left: features.display().to_string(),
                    left_rows: x.rows(),
                    right: p.display().to_string(),
                    right_rows: rows.len(),
                });
            }
            let rows: Vec<Vec<f64>> = rows.into_iter().map(|(_, r)| r).collect();
            Some(Matrix::from_rows(&rows)?)
        }
        None => None,
    };
    Dataset::new(x, x_star, y)
}

/// Write a matrix as headerless CSV using the shortest round-tripping float
/// representation.
pub fn write_matrix_csv(path: &Path, m: &Matrix) -> Result<()> {
    let io = |source| Error::Io {
        file: path.to_path_buf(),
        source,
    };
    let mut out = std::io::BufWriter::new(File::create(path).map_err(io)?);
    for row in m.iter_rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", line.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn write_labels_csv(path: &Path, y: &[i64]) -> Result<()> {
    let io = |source| Error::Io {
        file: path.to_path_buf(),
        source,
    };
    let mut out = std::io::BufWriter::new(File::create(path).map_err(io)?);
    for l in y {
        writeln!(out, "{l}").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Read a single-column vector of reals (e.g. human scores).
pub fn read_vector_csv(path: &Path) -> Result<Vec<f64>> {
    let rows = read_numeric_csv(path)?;
    rows.into_iter()
        .map(|(line, r)| {
            if r.len() == 1 {
                Ok(r[0])
            } else {
                Err(Error::Parse {
                    file: path.to_path_buf(),
                    line,
                    message: format!("expected one column, found {}", r.len()),
                })
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    L1,
    L2,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Original,
    Privileged,
}

fn normalize_rows(m: &Matrix, scheme: Normalization) -> Matrix {
    m.map_rows(|_, src, dst| {
        let norm = match scheme {
            Normalization::L1 => src.iter().map(|v| v.abs()).sum::<f64>(),
            Normalization::L2 => src.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Normalization::None => return,
        };
        if norm > 0.0 {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = s / norm;
            }
        }
    })
}

/// Scale every nonzero sample of one space to unit L1 or L2 norm. All-zero
/// rows are left as they are.
pub fn normalize(data: &Dataset, scheme: Normalization, space: Space) -> Result<Dataset> {
    let mut out = data.clone();
    match space {
        Space::Original => out.x = normalize_rows(&data.x, scheme),
        Space::Privileged => out.x_star = Some(normalize_rows(data.privileged()?, scheme)),
    }
    Ok(out)
}

/// Train/test index sets from a stratified split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified split: `n_train_per_class` random samples of every class go to
/// training, the rest to test. Index lists are sorted.
pub fn split_indices(data: &Dataset, n_train_per_class: usize, seed: u64) -> Result<SplitIndices> {
    let mut rng = rng::rng(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, mut idx) in data.class_indices() {
        if idx.len() < n_train_per_class + 1 {
            return Err(Error::Data(format!(
                "class {label} has {} samples, need at least {} for {} training samples per class",
                idx.len(),
                n_train_per_class + 1,
                n_train_per_class
            )));
        }
        idx.shuffle(&mut rng);
        train.extend_from_slice(&idx[..n_train_per_class]);
        test.extend_from_slice(&idx[n_train_per_class..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

pub fn split(data: &Dataset, n_train_per_class: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    let s = split_indices(data, n_train_per_class, seed)?;
    Ok((data.subset(&s.train), data.subset(&s.test)))
}

/// Parameters of the synthetic LUPI generator.
///
/// Each sample gets a label `y` and an easiness `e` drawn uniformly from
/// `easiness`. Both spaces place the sample at `y * e` along their first
/// coordinate axis and add isotropic Gaussian noise (`noise_priv` in the
/// privileged space, `noise_orig` in the original space), so easiness is
/// shared across the two views.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub d_star: usize,
    pub noise_orig: f64,
    pub noise_priv: f64,
    pub easiness: (f64, f64),
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n: 600,
            d: 10,
            d_star: 2,
            noise_orig: 1.0,
            noise_priv: 0.05,
            easiness: (0.2, 2.0),
            seed: 1,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.n == 0 || self.n % 2 != 0 {
            return bad(format!("sample count must be even and positive, got {}", self.n));
        }
        if self.d == 0 || self.d_star == 0 {
            return bad("dimensions must be positive".into());
        }
        if !(self.noise_orig >= 0.0 && self.noise_priv >= 0.0)
            || !self.noise_orig.is_finite()
            || !self.noise_priv.is_finite()
        {
            return bad("noise levels must be finite and non-negative".into());
        }
        let (lo, hi) = self.easiness;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("easiness range must satisfy 0 < lo <= hi, got [{lo}, {hi}]"));
        }
        Ok(())
    }
}

/// Synthetic data plus the latent easiness of every sample.
#[derive(Debug, Clone)]
pub struct SyntheticDraw {
    pub data: Dataset,
    pub easiness: Vec<f64>,
}

const STREAM_LABELS: u64 = 0;
const STREAM_EASINESS: u64 = 1;
const STREAM_PRIV_NOISE: u64 = 2;
const STREAM_ORIG_NOISE: u64 = 3;

pub fn make_synthetic_lupi(spec: &SyntheticSpec) -> Result<Dataset> {
    make_synthetic_lupi_with_easiness(spec).map(|d| d.data)
}

pub fn make_synthetic_lupi_with_easiness(spec: &SyntheticSpec) -> Result<SyntheticDraw> {
    spec.validate()?;
    let n = spec.n;
    let mut y: Vec<i64> = (0..n).map(|i| if i < n / 2 { 1 } else { -1 }).collect();
    y.shuffle(&mut rng::rng_for(spec.seed, STREAM_LABELS));

    let (lo, hi) = spec.easiness;
    let mut e_rng = rng::rng_for(spec.seed, STREAM_EASINESS);
    let easiness: Vec<f64> = (0..n)
        .map(|_| if lo == hi { lo } else { e_rng.gen_range(lo..=hi) })
        .collect();

    let view = |dim: usize, sigma: f64, stream: u64| -> Matrix {
        let mut m = Matrix::zeros(n, dim);
        let mut r = rng::rng_for(spec.seed, stream);
        let noise = Normal::new(0.0, sigma.max(0.0)).expect("sigma validated");
        for i in 0..n {
            let row = m.row_mut(i);
            for v in row.iter_mut() {
                *v = if sigma > 0.0 { noise.sample(&mut r) } else { 0.0 };
            }
            row[0] += y[i] as f64 * easiness[i];
        }
        m
    };
    let x_star = view(spec.d_star, spec.noise_priv, STREAM_PRIV_NOISE);
    let x = view(spec.d, spec.noise_orig, STREAM_ORIG_NOISE);
    Ok(SyntheticDraw {
        data: Dataset::new(x, Some(x_star), y)?,
        easiness,
    })
}

/// Aggregated human easiness scores, 1 (hardest) to 16 (easiest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanScores(Vec<f64>);

impl HumanScores {
    pub const MIN: f64 = 1.0;
    pub const MAX: f64 = 16.0;

    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if let Some((i, s)) = scores
            .iter()
            .enumerate()
            .find(|(_, s)| !(Self::MIN..=Self::MAX).contains(*s))
        {
            return Err(Error::Data(format!(
                "score {s} at index {i} is outside [{}, {}]",
                Self::MIN,
                Self::MAX
            )));
        }
        Ok(Self(scores))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Affine map of human scores onto margins in [0, 2]. Values up to 1 mark
/// hard samples. The output is not thresholded; apply
/// [`MarginVector::threshold`](crate::margin_transfer::MarginVector::threshold)
/// before using it as transfer margins.
pub fn score_to_margin(scores: &HumanScores, y: &[i64]) -> Result<Vec<f64>> {
    if scores.0.len() != y.len() {
        return Err(Error::RowMismatch {
            left: "scores".into(),
            left_rows: scores.0.len(),
            right: "labels".into(),
            right_rows: y.len(),
        });
    }
    let span = HumanScores::MAX - HumanScores::MIN;
    Ok(scores
        .0
        .iter()
        .map(|s| 2.0 * (s - HumanScores::MIN) / span)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        let mut f = File::create(&p).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn load_last_column_labels() {
        let dir = tempfile::tempdir().unwrap();
        let f = write(dir.path(), "x.csv", "a,b,label\n1,2,1\n3,4,-1\n5,6,1\n");
        let d = load_dataset(&f, None, &LabelSource::LastColumn).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.dim(), 2);
        assert!(d.x_star.is_none());
        assert_eq!(d.y, vec![1, -1, 1]);
        assert_eq!(d.x.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn load_with_privileged_block() {
        let dir = tempfile::tempdir().unwrap();
        let f = write(dir.path(), "x.csv", "1,2,1\n3,4,-1\n5,6,1\n");
        let p = write(dir.path(), "p.csv", "1,0,0,0\n0,1,0,0\n0,0,1,0\n");
        let d = load_dataset(&f, Some(&p), &LabelSource::LastColumn).unwrap();
        assert_eq!(d.dim_star(), Some(4));
    }

    #[test]
    fn privileged_row_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let f = write(dir.path(), "x.csv", "1,2,1\n3,4,-1\n5,6,1\n");
        let p = write(dir.path(), "p.csv", "1,0,0,0\n0,1,0,0\n");
        let err = load_dataset(&f, Some(&p), &LabelSource::LastColumn).unwrap_err();
        assert!(err.to_string().contains("row-count mismatch"), "{err}");
    }

    #[test]
    fn non_numeric_cell_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let f = write(dir.path(), "x.csv", "1,2,1\n3,oops,-1\n");
        let err = load_dataset(&f, None, &LabelSource::LastColumn).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn invalid_label_reported() {
        let dir = tempfile::tempdir().unwrap();
        let f = write(dir.path(), "x.csv", "1,2,1\n3,4,0.5\n");
        let err = load_dataset(&f, None, &LabelSource::LastColumn).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let f = write(dir.path(), "y.csv", "1,2,1\n3,4,-2\n");
        let err = load_dataset(&f, None, &LabelSource::LastColumn).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn separate_label_file() {
        let dir = tempfile::tempdir().unwrap();
        let f = write(dir.path(), "x.csv", "1,2\n3,4\n");
        let l = write(dir.path(), "y.csv", "0\n1\n");
        let d = load_dataset(&f, None, &LabelSource::File(l)).unwrap();
        assert_eq!(d.dim(), 2);
        assert_eq!(d.task(), Task::Multiclass(vec![0, 1]));
    }

    #[test]
    fn normalize_examples() {
        let x = Matrix::from_rows(&[[3.0, 4.0], [3.0, 1.0], [0.0, 0.0]]).unwrap();
        let d = Dataset::new(x, None, vec![1, -1, 1]).unwrap();
        let l2 = normalize(&d, Normalization::L2, Space::Original).unwrap();
        assert!((l2.x.row(0)[0] - 0.6).abs() < 1e-15);
        assert!((l2.x.row(0)[1] - 0.8).abs() < 1e-15);
        assert_eq!(l2.x.row(2), &[0.0, 0.0]);
        let l1 = normalize(&d, Normalization::L1, Space::Original).unwrap();
        assert_eq!(l1.x.row(1), &[0.75, 0.25]);
        assert_eq!(l1.x.row(2), &[0.0, 0.0]);
    }

    #[test]
    fn normalize_missing_privileged() {
        let d = Dataset::new(Matrix::from_rows(&[[1.0]]).unwrap(), None, vec![1]).unwrap();
        assert!(normalize(&d, Normalization::L2, Space::Privileged).is_err());
    }

    fn ten_samples() -> Dataset {
        let rows: Vec<[f64; 1]> = (0..10).map(|i| [i as f64]).collect();
        let y = (0..10).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        Dataset::new(Matrix::from_rows(&rows).unwrap(), None, y).unwrap()
    }

    #[test]
    fn split_counts_and_determinism() {
        let d = ten_samples();
        let a = split_indices(&d, 3, 7).unwrap();
        assert_eq!(a.train.len(), 6);
        assert_eq!(a.test.len(), 4);
        assert!(a.train.iter().all(|i| !a.test.contains(i)));
        let b = split_indices(&d, 3, 7).unwrap();
        assert_eq!(a, b);
        assert!(split_indices(&d, 5, 7).is_err());
    }

    #[test]
    fn score_mapping() {
        let s = HumanScores::new(vec![1.0, 16.0, 8.5]).unwrap();
        let rho = score_to_margin(&s, &[1, 1, -1]).unwrap();
        assert_eq!(rho, vec![0.0, 2.0, 1.0]);
        assert!(HumanScores::new(vec![0.5]).is_err());
        assert!(HumanScores::new(vec![16.5]).is_err());
    }

    #[test]
    fn synthetic_rejects_odd_n() {
        let spec = SyntheticSpec {
            n: 7,
            ..Default::default()
        };
        assert!(make_synthetic_lupi(&spec).is_err());
    }

    #[test]
    fn synthetic_noise_free_privileged_is_separable() {
        let spec = SyntheticSpec {
            n: 50,
            noise_priv: 0.0,
            seed: 3,
            ..Default::default()
        };
        let d = make_synthetic_lupi(&spec).unwrap();
        let xs = d.x_star.unwrap();
        for (i, &y) in d.y.iter().enumerate() {
            assert_eq!(xs.row(i)[0].signum() as i64, y);
        }
        assert_eq!(d.y.iter().filter(|&&l| l == 1).count(), 25);
    }

    #[test]
    fn synthetic_deterministic() {
        let spec = SyntheticSpec::default();
        let a = make_synthetic_lupi(&spec).unwrap();
        let b = make_synthetic_lupi(&spec).unwrap();
        assert_eq!(a, b);
    }
}
