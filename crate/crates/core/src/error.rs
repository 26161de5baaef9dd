//! Error type shared across the library.

use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Corpus root missing or not a directory.
    #[error("corpus root `{0}` is not a readable directory")]
    CorpusRoot(PathBuf),

    /// A class subtree is missing or contains no documents.
    #[error("no documents found under `{0}`")]
    NoDocuments(PathBuf),

    /// A class directory mixes fold subdirectories with loose files.
    #[error("`{0}` mixes fold directories with loose document files")]
    MixedLayout(PathBuf),

    /// I/O failure tagged with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A document-specific problem (tag misalignment, bad sidecar, ...).
    #[error("document `{doc}`: {reason}")]
    Document { doc: String, reason: String },

    /// An argument violated a documented precondition.
    #[error("invalid `{name}`: {reason}")]
    Param { name: &'static str, reason: String },

    /// Vector or matrix dimensions disagree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// An operation needed a different matrix weighting.
    #[error("{op} requires {required} weighting, got {got}")]
    Weighting {
        op: &'static str,
        required: &'static str,
        got: &'static str,
    },

    /// Training data lacks one of the two classes.
    #[error("class `{0}` absent from training data")]
    MissingClass(String),

    /// An iterative solver failed to reach its tolerance.
    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// Train/test contamination detected during evaluation.
    #[error("evaluation leakage: document `{0}` appears in both train and test sets")]
    Leakage(String),

    /// Malformed or semantically invalid configuration.
    #[error("config: {0}")]
    Config(String),

    /// Malformed model artifact or matrix dump.
    #[error("artifact: {0}")]
    Artifact(String),

    /// A member of an ensemble failed to train.
    #[error("ensemble member `{id}`: {source}")]
    Member {
        id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Helper for precondition failures.
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Param {
            name,
            reason: reason.into(),
        }
    }

    /// Helper for path-tagged I/O errors.
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
