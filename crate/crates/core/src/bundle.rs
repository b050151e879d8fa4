//! Serializable trained models and per-sample easiness diagnostics.

use serde::{Deserialize, Serialize};

use crate::data::{score_to_margin, Dataset, HumanScores};
use crate::error::{Error, Result};
use crate::margin_transfer::{train_margin_transfer, MarginTransferConfig, MarginVector};
use crate::method::{GridPoint, Method, TrainSettings};
use crate::multiclass::{predict_ovr, train_ovr, OvrModel, OvrTrainer};
use crate::qp::QpStatus;
use crate::stats::{easiness_correlation, Tau};
use crate::svm::{decision_margins, predict_labels, train_svm, LinearModel, SvmConfig, SvmFit};
use crate::svm_plus::{slack_values, train_svm_plus, SlackModel, SvmPlusConfig};

/// Optimality certificate of a dual coordinate descent run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmCertificate {
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub epochs: usize,
    pub converged: bool,
}

impl From<&SvmFit> for SvmCertificate {
    fn from(f: &SvmFit) -> Self {
        Self {
            primal_objective: f.primal_objective,
            dual_objective: f.dual_objective,
            gap: f.gap,
            epochs: f.epochs,
            converged: f.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BundleModel {
    /// Plain SVM, on either feature space.
    Linear {
        model: LinearModel,
        certificate: SvmCertificate,
    },
    SvmPlus {
        model: LinearModel,
        slack: SlackModel,
        objective: f64,
        kkt_residual: f64,
        status: QpStatus,
    },
    MarginTransfer {
        teacher: LinearModel,
        margins: MarginVector,
        student: LinearModel,
        teacher_certificate: SvmCertificate,
        student_certificate: SvmCertificate,
    },
    Ovr { model: OvrModel },
}

/// A trained model with everything needed to apply and audit it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub method: Method,
    pub hyperparameters: GridPoint,
    pub settings: TrainSettings,
    pub model: BundleModel,
}

impl ModelBundle {
    pub fn train(method: Method, data: &Dataset, point: &GridPoint, settings: &TrainSettings) -> Result<Self> {
        if method.needs_privileged() {
            data.privileged()?;
        }
        let second = || {
            point
                .privileged
                .ok_or_else(|| Error::InvalidArgument(format!("{method} needs a privileged-space parameter")))
        };
        let svm = |c| SvmConfig {
            c,
            use_bias: true,
            ..settings.svm
        };
        let x = if method == Method::ReferencePrivileged {
            data.privileged()?
        } else {
            &data.x
        };
        let model = if !data.is_binary() {
            let trainer = match method {
                Method::Svm | Method::ReferencePrivileged => OvrTrainer::Svm(svm(point.c)),
                Method::MarginTransfer => OvrTrainer::MarginTransfer(transfer_config(point.c, second()?, settings)),
                Method::SvmPlus => OvrTrainer::SvmPlus(plus_config(point.c, second()?, settings)),
            };
            let view;
            let data = if method == Method::ReferencePrivileged {
                view = Dataset::new(x.clone(), None, data.y.clone())?;
                &view
            } else {
                data
            };
            BundleModel::Ovr {
                model: train_ovr(data, &trainer)?,
            }
        } else {
            match method {
                Method::Svm | Method::ReferencePrivileged => {
                    let fit = train_svm(x, &data.y, &svm(point.c))?;
                    BundleModel::Linear {
                        certificate: (&fit).into(),
                        model: fit.model,
                    }
                }
                Method::MarginTransfer => {
                    let fit = train_margin_transfer(data, &transfer_config(point.c, second()?, settings))?;
                    BundleModel::MarginTransfer {
                        teacher_certificate: (&fit.teacher_fit).into(),
                        student_certificate: (&fit.student_fit).into(),
                        teacher: fit.teacher,
                        margins: fit.margins,
                        student: fit.student,
                    }
                }
                Method::SvmPlus => {
                    let fit = train_svm_plus(x, data.privileged()?, &data.y, &plus_config(point.c, second()?, settings))?;
                    BundleModel::SvmPlus {
                        model: fit.model,
                        slack: fit.slack,
                        objective: fit.objective,
                        kkt_residual: fit.kkt_residual,
                        status: fit.status,
                    }
                }
            }
        };
        Ok(Self {
            method,
            hyperparameters: *point,
            settings: *settings,
            model,
        })
    }

    /// Decision function deployed at test time.
    pub fn predict(&self, data: &Dataset) -> Result<Vec<i64>> {
        let x = if self.method == Method::ReferencePrivileged {
            data.privileged()?
        } else {
            &data.x
        };
        match &self.model {
            BundleModel::Linear { model, .. } | BundleModel::SvmPlus { model, .. } => predict_labels(model, x),
            BundleModel::MarginTransfer { student, .. } => predict_labels(student, x),
            BundleModel::Ovr { model } => predict_ovr(model, x),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Data(format!("model serialization: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Data(format!("model bundle: {e}")))
    }
}

fn transfer_config(c_orig: f64, c_priv: f64, settings: &TrainSettings) -> MarginTransferConfig {
    MarginTransferConfig {
        c_orig,
        c_priv,
        epsilon: settings.epsilon,
        student_bias: false,
        solver: settings.svm,
    }
}

fn plus_config(c: f64, gamma: f64, settings: &TrainSettings) -> SvmPlusConfig {
    SvmPlusConfig {
        c,
        gamma,
        tol: settings.qp_tol,
        max_iter: settings.qp_max_iter,
    }
}

/// Pairwise rank agreement between the three easiness measures. A pair is
/// absent when one side is unavailable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauTriple {
    pub privileged_original: Option<Tau>,
    pub privileged_scores: Option<Tau>,
    pub original_scores: Option<Tau>,
}

/// Per-sample diagnostics of a binary bundle on labelled data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub method: Method,
    /// `yᵢ f(xᵢ)` of the deployed original-space model.
    pub original_margins: Option<Vec<f64>>,
    /// `yᵢ f*(x*ᵢ)` of a privileged-space teacher or reference model.
    pub teacher_margins: Option<Vec<f64>>,
    /// SVM+ slack function values.
    pub slacks: Option<Vec<f64>>,
    /// Teacher margins floored at the bundle's epsilon.
    pub rho: Option<Vec<f64>>,
    /// Easiness from human difficulty scores.
    pub score_margins: Option<Vec<f64>>,
    pub tau: TauTriple,
}

impl Diagnostics {
    /// Privileged-space easiness: teacher margins, or negated slacks, where
    /// a small slack means an easy sample.
    pub fn privileged_easiness(&self) -> Option<Vec<f64>> {
        self.teacher_margins
            .clone()
            .or_else(|| self.slacks.as_ref().map(|s| s.iter().map(|v| -v).collect()))
    }
}

pub fn diagnose(bundle: &ModelBundle, data: &Dataset, scores: Option<&HumanScores>) -> Result<Diagnostics> {
    let y = &data.y;
    let mut d = Diagnostics {
        method: bundle.method,
        original_margins: None,
        teacher_margins: None,
        slacks: None,
        rho: None,
        score_margins: None,
        tau: TauTriple {
            privileged_original: None,
            privileged_scores: None,
            original_scores: None,
        },
    };
    match &bundle.model {
        BundleModel::Ovr { .. } => {
            return Err(Error::InvalidArgument("diagnostics need a binary model".into()));
        }
        BundleModel::Linear { model, .. } if bundle.method == Method::ReferencePrivileged => {
            d.teacher_margins = Some(decision_margins(model, data.privileged()?, y)?);
        }
        BundleModel::Linear { model, .. } => {
            d.original_margins = Some(decision_margins(model, &data.x, y)?);
        }
        BundleModel::SvmPlus { model, slack, .. } => {
            d.original_margins = Some(decision_margins(model, &data.x, y)?);
            d.slacks = Some(slack_values(slack, data.privileged()?)?);
        }
        BundleModel::MarginTransfer {
            teacher,
            margins,
            student,
            ..
        } => {
            d.original_margins = Some(decision_margins(student, &data.x, y)?);
            let raw = decision_margins(teacher, data.privileged()?, y)?;
            d.rho = Some(MarginVector::threshold(&raw, margins.epsilon)?.rho);
            d.teacher_margins = Some(raw);
        }
    }
    if let Some(s) = scores {
        if s.as_slice().len() != data.len() {
            return Err(Error::RowMismatch {
                left: "scores".into(),
                left_rows: s.as_slice().len(),
                right: "samples".into(),
                right_rows: data.len(),
            });
        }
        d.score_margins = Some(score_to_margin(s, y)?);
    }
    let privileged = d.privileged_easiness();
    let tau = |a: &Option<Vec<f64>>, b: &Option<Vec<f64>>| -> Result<Option<Tau>> {
        match (a, b) {
            (Some(a), Some(b)) => easiness_correlation(a, b).map(Some),
            _ => Ok(None),
        }
    };
    d.tau = TauTriple {
        privileged_original: tau(&privileged, &d.original_margins)?,
        privileged_scores: tau(&privileged, &d.score_margins)?,
        original_scores: tau(&d.original_margins, &d.score_margins)?,
    };
    Ok(d)
}
