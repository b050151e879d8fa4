//! Linear max-margin classifiers that use privileged information: features
//! available for the training samples only.
//!
//! * [`svm`]: weighted soft-margin SVM by dual coordinate descent.
//! * [`svm_plus`]: SVM+, slacks modeled as a linear function of the
//!   privileged features, solved as a QP by [`qp`].
//! * [`margin_transfer`]: a privileged-space teacher sets per-sample margins
//!   for the original-space student.
//! * [`multiclass`], [`model_selection`], [`stats`], [`experiment`]: the
//!   evaluation protocol around them.
//!
//! The `parallel` feature (on by default) runs grid points, folds, repeats
//! and one-vs-rest classes on a rayon pool; see [`par`].

pub mod bundle;
pub mod data;
pub mod error;
pub mod experiment;
pub mod margin_transfer;
pub mod matrix;
pub mod method;
pub mod model_selection;
pub mod multiclass;
pub mod par;
pub mod qp;
pub mod rng;
pub mod stats;
pub mod svm;
pub mod svm_plus;

pub use error::{Error, Result};
