//! Detecting deceptive hotel reviews with lexical and latent-semantic
//! features.
//!
//! The crate covers the full pipeline: corpus ingestion and stratified
//! folds ([`corpus`]), n-gram / tf-idf / part-of-speech features
//! ([`features`]), latent semantic indexing with optional supervised
//! sprinkling ([`lsi`]), multinomial naive Bayes and linear SVM
//! classifiers ([`classifiers`]), a majority-voting ensemble
//! ([`ensemble`]), cross-validated evaluation ([`eval`]), and binary model
//! artifacts ([`persist`]).

pub mod classifiers;
pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod features;
pub mod lsi;
pub mod persist;
pub mod sparse;

pub use error::{Error, Result};

pub use nalgebra;
