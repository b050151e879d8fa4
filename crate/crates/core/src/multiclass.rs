//! One-versus-rest reduction. Every class gets a binary problem (class vs.
//! rest) trained with the same hyperparameters, and prediction takes the
//! class whose decision value is largest.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::margin_transfer::{train_margin_transfer, MarginTransferConfig, MarginVector};
use crate::matrix::Matrix;
use crate::par;
use crate::svm::{train_svm, LinearModel, SvmConfig};
use crate::svm_plus::{train_svm_plus, SlackModel, SvmPlusConfig};

/// Binary trainer used for each class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum OvrTrainer {
    Svm(SvmConfig),
    MarginTransfer(MarginTransferConfig),
    SvmPlus(SvmPlusConfig),
}

impl OvrTrainer {
    fn needs_privileged(&self) -> bool {
        !matches!(self, OvrTrainer::Svm(_))
    }
}

/// Privileged-space by-products kept per class for diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OvrAux {
    None,
    Transfer { teacher: LinearModel, margins: MarginVector },
    Slack { slack: SlackModel },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvrModel {
    pub class_ids: Vec<i64>,
    pub models: Vec<LinearModel>,
    pub aux: Vec<OvrAux>,
}

impl OvrModel {
    pub fn dim(&self) -> usize {
        self.models[0].dim()
    }

    /// Decision values, one row per sample, one column per class.
    pub fn scores(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: x.cols(),
            });
        }
        let k = self.models.len();
        let mut out = Matrix::zeros(x.rows(), k);
        for (i, row) in x.iter_rows().enumerate() {
            for (c, m) in self.models.iter().enumerate() {
                out.row_mut(i)[c] = m.decision(row);
            }
        }
        Ok(out)
    }
}

/// Index of the largest score; the first one wins ties.
pub fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = k;
        }
    }
    best
}

fn one_vs_rest_labels(y: &[i64], positive: i64) -> Vec<i64> {
    y.iter().map(|&l| if l == positive { 1 } else { -1 }).collect()
}

pub fn train_ovr(data: &Dataset, trainer: &OvrTrainer) -> Result<OvrModel> {
    let class_ids = data.classes();
    if class_ids.len() < 2 {
        return Err(Error::Data(format!(
            "one-vs-rest needs at least 2 classes, found {}",
            class_ids.len()
        )));
    }
    if trainer.needs_privileged() {
        data.privileged()?;
    }
    let fits = par::map_slice(&class_ids, |&class| -> Result<(LinearModel, OvrAux)> {
        let y = one_vs_rest_labels(&data.y, class);
        match trainer {
            OvrTrainer::Svm(cfg) => Ok((train_svm(&data.x, &y, cfg)?.model, OvrAux::None)),
            OvrTrainer::MarginTransfer(cfg) => {
                let binary = Dataset {
                    x: data.x.clone(),
                    x_star: data.x_star.clone(),
                    y,
                };
                let fit = train_margin_transfer(&binary, cfg)?;
                Ok((
                    fit.student,
                    OvrAux::Transfer {
                        teacher: fit.teacher,
                        margins: fit.margins,
                    },
                ))
            }
            OvrTrainer::SvmPlus(cfg) => {
                let fit = train_svm_plus(&data.x, data.privileged()?, &y, cfg)?;
                Ok((fit.model, OvrAux::Slack { slack: fit.slack }))
            }
        }
    });
    let mut models = Vec::with_capacity(class_ids.len());
    let mut aux = Vec::with_capacity(class_ids.len());
    for (class, fit) in class_ids.iter().zip(fits) {
        let (m, a) = fit.map_err(|e| match e {
            Error::Solver(msg) => Error::Solver(format!("class {class}: {msg}")),
            other => other,
        })?;
        models.push(m);
        aux.push(a);
    }
    Ok(OvrModel {
        class_ids,
        models,
        aux,
    })
}

/// Class of maximal decision value for every row.
pub fn predict_ovr(model: &OvrModel, x: &Matrix) -> Result<Vec<i64>> {
    let scores = model.scores(x)?;
    Ok(scores
        .iter_rows()
        .map(|row| model.class_ids[argmax_first(row)])
        .collect())
}
