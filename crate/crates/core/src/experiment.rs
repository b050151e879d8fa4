//! Repeated train/test evaluation of several methods with per-repeat model
//! selection, summarized as mean ± standard error with paired Wilcoxon tests.

use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::data::{
    load_dataset, make_synthetic_lupi, normalize, split, Dataset, LabelSource, Normalization, Space,
    SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::method::{fit, GridPoint, Method, TrainSettings};
use crate::model_selection::{cross_validate, grid_for, CvGrid, CvPlan};
use crate::par;
use crate::rng;
use crate::stats::{accuracy, mean_stderr, wilcoxon_signed_rank};

pub const DEFAULT_REPEATS: usize = 20;
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DataSource {
    Files {
        features: PathBuf,
        privileged: Option<PathBuf>,
        /// `None` reads labels from the last feature column.
        labels: Option<PathBuf>,
    },
    Synthetic(SyntheticSpec),
}

impl DataSource {
    /// The dataset of one repeat. Files are the same every repeat; a
    /// synthetic source draws a fresh sample per repeat.
    pub fn load(&self, repeat: usize) -> Result<Dataset> {
        match self {
            DataSource::Files {
                features,
                privileged,
                labels,
            } => {
                let labels = labels.clone().map_or(LabelSource::LastColumn, LabelSource::File);
                load_dataset(features, privileged.as_deref(), &labels)
            }
            DataSource::Synthetic(spec) => make_synthetic_lupi(&SyntheticSpec {
                seed: rng::derive(spec.seed, repeat as u64),
                ..*spec
            }),
        }
    }

    pub fn is_synthetic(&self) -> bool {
        matches!(self, DataSource::Synthetic(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: String,
    pub source: DataSource,
    pub methods: Vec<Method>,
    pub repeats: usize,
    pub n_train_per_class: usize,
    pub normalize_original: Normalization,
    pub normalize_privileged: Normalization,
    /// Overrides the task default (5 for both binary and multiclass).
    pub folds: Option<usize>,
    /// Overrides the task default (5 binary, 1 multiclass).
    pub cv_repeats: Option<usize>,
    /// Original-space C grid; defaults to the grid for the normalization.
    pub c_grid: Option<Vec<f64>>,
    /// Privileged-space grid: teacher C for Margin Transfer and C of the
    /// privileged reference.
    pub priv_grid: Option<Vec<f64>>,
    /// γ grid for SVM+; defaults to the privileged-space grid.
    pub gamma_grid: Option<Vec<f64>>,
    pub seed: u64,
    pub alpha: f64,
    pub settings: TrainSettings,
}

impl ExperimentConfig {
    pub fn new(task: impl Into<String>, source: DataSource) -> Self {
        Self {
            task: task.into(),
            source,
            methods: Method::ALL.to_vec(),
            repeats: DEFAULT_REPEATS,
            n_train_per_class: 100,
            normalize_original: Normalization::None,
            normalize_privileged: Normalization::None,
            folds: None,
            cv_repeats: None,
            c_grid: None,
            priv_grid: None,
            gamma_grid: None,
            seed: 0,
            alpha: DEFAULT_ALPHA,
            settings: TrainSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("no methods selected".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidArgument("repeats must be at least 1".into()));
        }
        if self.n_train_per_class == 0 {
            return Err(Error::InvalidArgument("training size per class must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }

    fn resolve(&self, data: &Dataset) -> Result<ResolvedConfig> {
        let default_plan = CvPlan::for_data(data, 0);
        let plan = CvPlan {
            outer_repeats: self.cv_repeats.unwrap_or(default_plan.outer_repeats),
            folds: self.folds.unwrap_or(default_plan.folds),
            seed: self.seed,
        };
        plan.validate()?;
        let c_orig = self
            .c_grid
            .clone()
            .unwrap_or_else(|| grid_for(self.normalize_original, Space::Original));
        let c_priv = self
            .priv_grid
            .clone()
            .unwrap_or_else(|| grid_for(self.normalize_privileged, Space::Privileged));
        let gamma = self.gamma_grid.clone().unwrap_or_else(|| c_priv.clone());
        let grids = self
            .methods
            .iter()
            .map(|&m| {
                let g = match m {
                    Method::Svm => CvGrid::single(c_orig.clone()),
                    Method::MarginTransfer => CvGrid::new(c_orig.clone(), c_priv.clone()),
                    Method::SvmPlus => CvGrid::new(c_orig.clone(), gamma.clone()),
                    Method::ReferencePrivileged => CvGrid::single(c_priv.clone()),
                }?;
                Ok(MethodGrid { method: m, grid: g })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ResolvedConfig {
            config: self.clone(),
            binary: data.is_binary(),
            n_samples: data.len(),
            dim: data.dim(),
            dim_star: data.dim_star(),
            cv: plan,
            grids,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodGrid {
    pub method: Method,
    pub grid: CvGrid,
}

/// The configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub config: ExperimentConfig,
    pub binary: bool,
    pub n_samples: usize,
    pub dim: usize,
    pub dim_star: Option<usize>,
    pub cv: CvPlan,
    pub grids: Vec<MethodGrid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean: f64,
    /// Absent with a single repeat.
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTest {
    pub a: Method,
    pub b: Method,
    /// Mean of `accuracy(a) − accuracy(b)`.
    pub mean_difference: f64,
    pub p_value: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ResolvedConfig,
    pub methods: Vec<Method>,
    /// Test accuracy, one row per repeat, one column per method.
    pub accuracies: Vec<Vec<f64>>,
    /// Grid point chosen by cross-validation, same layout as `accuracies`.
    pub selected: Vec<Vec<GridPoint>>,
    pub summary: Vec<MethodSummary>,
    /// Pairwise two-sided tests over repeats; absent with a single repeat.
    pub wilcoxon: Option<Vec<PairedTest>>,
}

const STREAM_SPLIT: u64 = 0x5b11;
const STREAM_CV: u64 = 0xc0f0;

struct RepeatOutcome {
    accuracies: Vec<f64>,
    selected: Vec<GridPoint>,
}

fn run_repeat(data: &Dataset, resolved: &ResolvedConfig, repeat: usize) -> Result<RepeatOutcome> {
    let cfg = &resolved.config;
    let split_seed = rng::derive(rng::derive(cfg.seed, STREAM_SPLIT), repeat as u64);
    let (train, test) = split(data, cfg.n_train_per_class, split_seed)
        .map_err(|e| e.context(format!("repeat {repeat}")))?;
    let plan = CvPlan {
        seed: rng::derive(rng::derive(cfg.seed, STREAM_CV), repeat as u64),
        ..resolved.cv
    };
    let mut accuracies = Vec::with_capacity(resolved.grids.len());
    let mut selected = Vec::with_capacity(resolved.grids.len());
    for mg in &resolved.grids {
        let ctx = |e: Error| e.context(format!("repeat {repeat}, {}", mg.method));
        let cv = cross_validate(&train, mg.method, &mg.grid, &plan, &cfg.settings).map_err(ctx)?;
        let model = fit(mg.method, &train, &cv.best, &cfg.settings)
            .map_err(|e| e.context(format!("repeat {repeat}, {} at {}", mg.method, cv.best)))?;
        accuracies.push(accuracy(&model.predict(&test).map_err(ctx)?, &test.y)?);
        selected.push(cv.best);
    }
    Ok(RepeatOutcome {
        accuracies,
        selected,
    })
}

/// Load and normalize the dataset of one repeat.
pub fn prepare_data(config: &ExperimentConfig, repeat: usize) -> Result<Dataset> {
    let mut data = config.source.load(repeat)?;
    if config.normalize_original != Normalization::None {
        data = normalize(&data, config.normalize_original, Space::Original)?;
    }
    if config.normalize_privileged != Normalization::None {
        data = normalize(&data, config.normalize_privileged, Space::Privileged)?;
    }
    if config.methods.iter().any(|m| m.needs_privileged()) {
        data.privileged()
            .map_err(|_| Error::InvalidArgument("selected methods need privileged features".into()))?;
    }
    Ok(data)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let first = prepare_data(config, 0)?;
    let resolved = config.resolve(&first)?;
    let shared = (!config.source.is_synthetic()).then_some(first);
    let outcomes = par::map_range(config.repeats, |r| match &shared {
        Some(data) => run_repeat(data, &resolved, r),
        None => run_repeat(&prepare_data(config, r)?, &resolved, r),
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let methods = config.methods.clone();
    let accuracies: Vec<Vec<f64>> = outcomes.iter().map(|o| o.accuracies.clone()).collect();
    let selected = outcomes.into_iter().map(|o| o.selected).collect();
    let column = |k: usize| -> Vec<f64> { accuracies.iter().map(|row| row[k]).collect() };

    let summary = methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let col = column(k);
            let (mean, stderr) = match mean_stderr(&col) {
                Ok((m, s)) => (m, Some(s)),
                Err(_) => (col.iter().sum::<f64>() / col.len() as f64, None),
            };
            MethodSummary { method, mean, stderr }
        })
        .collect();

    let wilcoxon = if config.repeats >= 2 {
        let mut tests = Vec::new();
        for i in 0..methods.len() {
            for j in (i + 1)..methods.len() {
                let (a, b) = (column(i), column(j));
                let t = wilcoxon_signed_rank(&a, &b, config.alpha)?;
                let mean_difference = a.iter().zip(&b).map(|(x, y)| x - y).sum::<f64>() / a.len() as f64;
                tests.push(PairedTest {
                    a: methods[i],
                    b: methods[j],
                    mean_difference,
                    p_value: t.p_value,
                    reject: t.reject,
                });
            }
        }
        Some(tests)
    } else {
        None
    };

    Ok(ExperimentReport {
        config: resolved,
        methods,
        accuracies,
        selected,
        summary,
        wilcoxon,
    })
}

impl ExperimentReport {
    pub fn summary_for(&self, method: Method) -> Option<&MethodSummary> {
        self.summary.iter().find(|s| s.method == method)
    }

    /// Test of `a` against `b`, oriented so that `mean_difference` is
    /// `a − b`.
    pub fn test_between(&self, a: Method, b: Method) -> Option<PairedTest> {
        let tests = self.wilcoxon.as_ref()?;
        tests.iter().find_map(|t| {
            if t.a == a && t.b == b {
                Some(t.clone())
            } else if t.a == b && t.b == a {
                Some(PairedTest {
                    a,
                    b,
                    mean_difference: -t.mean_difference,
                    ..t.clone()
                })
            } else {
                None
            }
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Data(format!("report serialization: {e}")))
    }

    /// One row per task. Per method: mean and standard error; per LUPI
    /// method: p-value against plain SVM and whether it is a significant
    /// improvement.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let lupi: Vec<Method> = if self.methods.contains(&Method::Svm) {
            self.methods.iter().copied().filter(|m| m.is_lupi()).collect()
        } else {
            Vec::new()
        };
        let mut header = vec!["task".to_string()];
        for m in &self.methods {
            header.push(format!("{m}_mean"));
            header.push(format!("{m}_stderr"));
        }
        for m in &lupi {
            header.push(format!("{m}_vs_svm_p"));
            header.push(format!("{m}_vs_svm_significant"));
        }
        writeln!(out, "{}", header.join(","))?;

        let mut row = vec![self.config.config.task.replace(',', " ")];
        for s in &self.summary {
            row.push(format!("{:?}", s.mean));
            row.push(s.stderr.map(|v| format!("{v:?}")).unwrap_or_default());
        }
        for &m in &lupi {
            match self.test_between(m, Method::Svm) {
                Some(t) => {
                    row.push(format!("{:?}", t.p_value));
                    row.push((t.reject && t.mean_difference > 0.0).to_string());
                }
                None => {
                    row.push(String::new());
                    row.push(String::new());
                }
            }
        }
        writeln!(out, "{}", row.join(","))
    }
}
