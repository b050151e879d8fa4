//! Uniform fit/predict entry point over the four compared methods, for both
//! binary and one-vs-rest multiclass tasks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::margin_transfer::{train_margin_transfer, MarginTransferConfig, DEFAULT_EPSILON};
use crate::matrix::Matrix;
use crate::multiclass::{predict_ovr, train_ovr, OvrModel, OvrTrainer};
use crate::svm::{predict_labels, train_svm, LinearModel, SvmConfig};
use crate::svm_plus::{train_svm_plus, SvmPlusConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Plain SVM on the original features.
    Svm,
    MarginTransfer,
    SvmPlus,
    /// Plain SVM trained and tested on the privileged features: an upper
    /// reference, not a deployable model.
    #[serde(rename = "reference_svm_on_privileged")]
    ReferencePrivileged,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Svm,
        Method::MarginTransfer,
        Method::SvmPlus,
        Method::ReferencePrivileged,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Svm => "svm",
            Method::MarginTransfer => "margin_transfer",
            Method::SvmPlus => "svm_plus",
            Method::ReferencePrivileged => "reference_svm_on_privileged",
        }
    }

    /// Whether training reads the privileged block.
    pub fn needs_privileged(self) -> bool {
        self != Method::Svm
    }

    /// Whether the method has a second hyperparameter searched jointly with C.
    pub fn is_lupi(self) -> bool {
        matches!(self, Method::MarginTransfer | Method::SvmPlus)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

/// One hyperparameter setting. `c` is the original-space C (for the
/// reference method, the privileged-space C). `privileged` is the second
/// parameter of the LUPI methods: the teacher C for Margin Transfer, γ for
/// SVM+.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub c: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub privileged: Option<f64>,
}

impl GridPoint {
    pub fn single(c: f64) -> Self {
        Self { c, privileged: None }
    }

    pub fn pair(c: f64, privileged: f64) -> Self {
        Self {
            c,
            privileged: Some(privileged),
        }
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.privileged {
            Some(p) => write!(f, "(C={:e}, priv={:e})", self.c, p),
            None => write!(f, "(C={:e})", self.c),
        }
    }
}

/// Solver settings that are not searched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub svm: SvmConfig,
    pub epsilon: f64,
    pub qp_tol: f64,
    pub qp_max_iter: usize,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let plus = SvmPlusConfig::default();
        Self {
            svm: SvmConfig::default(),
            epsilon: DEFAULT_EPSILON,
            qp_tol: plus.tol,
            qp_max_iter: plus.max_iter,
        }
    }
}

impl TrainSettings {
    fn svm(&self, c: f64) -> SvmConfig {
        SvmConfig {
            c,
            use_bias: true,
            ..self.svm
        }
    }

    fn transfer(&self, point: &GridPoint) -> Result<MarginTransferConfig> {
        Ok(MarginTransferConfig {
            c_orig: point.c,
            c_priv: second(point, Method::MarginTransfer)?,
            epsilon: self.epsilon,
            student_bias: false,
            solver: self.svm,
        })
    }

    fn svm_plus(&self, point: &GridPoint) -> Result<SvmPlusConfig> {
        Ok(SvmPlusConfig {
            c: point.c,
            gamma: second(point, Method::SvmPlus)?,
            tol: self.qp_tol,
            max_iter: self.qp_max_iter,
        })
    }
}

fn second(point: &GridPoint, method: Method) -> Result<f64> {
    point
        .privileged
        .ok_or_else(|| Error::InvalidArgument(format!("{method} needs a privileged-space parameter")))
}

/// A model that predicts from either feature space.
#[derive(Debug, Clone, PartialEq)]
pub enum Trained {
    Binary { model: LinearModel, privileged: bool },
    Multiclass { model: OvrModel, privileged: bool },
}

impl Trained {
    fn inputs<'a>(&self, data: &'a Dataset) -> Result<&'a Matrix> {
        let privileged = match self {
            Trained::Binary { privileged, .. } | Trained::Multiclass { privileged, .. } => *privileged,
        };
        if privileged {
            data.privileged()
        } else {
            Ok(&data.x)
        }
    }

    pub fn predict(&self, data: &Dataset) -> Result<Vec<i64>> {
        let x = self.inputs(data)?;
        match self {
            Trained::Binary { model, .. } => predict_labels(model, x),
            Trained::Multiclass { model, .. } => predict_ovr(model, x),
        }
    }
}

/// View of `data` with the privileged block moved into the original slot.
fn privileged_view(data: &Dataset) -> Result<Dataset> {
    Ok(Dataset {
        x: data.privileged()?.clone(),
        x_star: None,
        y: data.y.clone(),
    })
}

pub fn fit(method: Method, data: &Dataset, point: &GridPoint, settings: &TrainSettings) -> Result<Trained> {
    if method.needs_privileged() {
        data.privileged()?;
    }
    let binary = data.is_binary();
    let privileged = method == Method::ReferencePrivileged;
    let view;
    let data = if privileged {
        view = privileged_view(data)?;
        &view
    } else {
        data
    };
    if binary {
        let model = match method {
            Method::Svm | Method::ReferencePrivileged => train_svm(&data.x, &data.y, &settings.svm(point.c))?.model,
            Method::MarginTransfer => train_margin_transfer(data, &settings.transfer(point)?)?.student,
            Method::SvmPlus => train_svm_plus(&data.x, data.privileged()?, &data.y, &settings.svm_plus(point)?)?.model,
        };
        Ok(Trained::Binary { model, privileged })
    } else {
        let trainer = match method {
            Method::Svm | Method::ReferencePrivileged => OvrTrainer::Svm(settings.svm(point.c)),
            Method::MarginTransfer => OvrTrainer::MarginTransfer(settings.transfer(point)?),
            Method::SvmPlus => OvrTrainer::SvmPlus(settings.svm_plus(point)?),
        };
        Ok(Trained::Multiclass {
            model: train_ovr(data, &trainer)?,
            privileged,
        })
    }
}
