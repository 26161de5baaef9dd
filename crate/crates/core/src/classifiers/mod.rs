//! The two base classifiers: multinomial naive Bayes over raw counts and
//! a linear soft-margin SVM over any feature channel.

pub mod nb;
pub mod svm;

pub use nb::{predict_nb, train_nb, NbModel};
pub use svm::{predict_svm, train_svm, SvmModel, SvmOptions};

/// Laplace smoothing default for naive Bayes.
pub const DEFAULT_ALPHA: f64 = 1.0;
/// SVM regularization trade-off default.
pub const DEFAULT_C: f64 = 1.0;
/// SVM convergence tolerance default (largest allowed single-coordinate
/// KKT violation).
pub const DEFAULT_TOL: f64 = 1e-4;
/// SVM sweep budget default.
pub const DEFAULT_MAX_ITER: usize = 1000;
