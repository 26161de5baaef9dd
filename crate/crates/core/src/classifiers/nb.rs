//! Multinomial naive Bayes over raw term counts, with Laplace smoothing.
//! All probability arithmetic stays in the log domain.

use crate::corpus::ClassLabel;
use crate::error::{Error, Result};
use crate::features::{TermDocMatrix, Weighting};
use crate::sparse::SparseVec;

/// Fitted class priors and per-term likelihoods, stored as logarithms.
#[derive(Debug, Clone, PartialEq)]
pub struct NbModel {
    log_prior: [f64; 2],
    log_likelihood: [Vec<f64>; 2],
    vocab_size: usize,
    alpha: f64,
}

/// Fits the model: `log_prior[c] = ln(N_c/N)` and `log_likelihood[c][t] =
/// ln((count(t,c) + alpha) / (total_c + alpha*|V|))`. The matrix must
/// carry raw counts; the multinomial likelihood has no meaning for
/// weighted entries.
pub fn train_nb(train: &TermDocMatrix, labels: &[ClassLabel], alpha: f64) -> Result<NbModel> {
    if train.weighting != Weighting::Count {
        return Err(Error::Weighting {
            op: "train_nb",
            required: "count",
            got: train.weighting.as_str(),
        });
    }
    if labels.len() != train.matrix.cols() {
        return Err(Error::Dimension {
            expected: train.matrix.cols(),
            got: labels.len(),
        });
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::param("alpha", "smoothing must be positive and finite"));
    }

    let vocab_size = train.matrix.rows();
    let n = labels.len();
    let mut n_class = [0usize; 2];
    let mut term_counts = [vec![0.0f64; vocab_size], vec![0.0f64; vocab_size]];
    for (j, &label) in labels.iter().enumerate() {
        let c = label.index();
        n_class[c] += 1;
        for (t, count) in train.matrix.col_vec(j).iter() {
            term_counts[c][t as usize] += count;
        }
    }
    for class in ClassLabel::ALL {
        if n_class[class.index()] == 0 {
            return Err(Error::MissingClass(class.as_str().to_string()));
        }
    }

    let log_prior = [
        (n_class[0] as f64 / n as f64).ln(),
        (n_class[1] as f64 / n as f64).ln(),
    ];
    let log_likelihood = term_counts.map(|counts| {
        let total: f64 = counts.iter().sum();
        let denom = total + alpha * vocab_size as f64;
        counts
            .into_iter()
            .map(|c| ((c + alpha) / denom).ln())
            .collect()
    });
    Ok(NbModel {
        log_prior,
        log_likelihood,
        vocab_size,
        alpha,
    })
}

/// Picks the class maximizing `log_prior[c] + Σ count(t)·log_likelihood
/// [c][t]` and returns both class scores (log-posteriors up to the shared
/// document constant). Indices outside the training vocabulary are
/// ignored; exact ties go to `deceptive`.
pub fn predict_nb(model: &NbModel, doc_counts: &SparseVec) -> (ClassLabel, [f64; 2]) {
    let mut scores = model.log_prior;
    for (t, count) in doc_counts.iter() {
        let t = t as usize;
        if t >= model.vocab_size {
            continue;
        }
        for c in 0..2 {
            scores[c] += count * model.log_likelihood[c][t];
        }
    }
    let label = if scores[ClassLabel::Truthful.index()] > scores[ClassLabel::Deceptive.index()] {
        ClassLabel::Truthful
    } else {
        ClassLabel::Deceptive
    };
    (label, scores)
}

impl NbModel {
    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn log_prior(&self) -> &[f64; 2] {
        &self.log_prior
    }

    pub fn log_likelihood(&self, class: ClassLabel) -> &[f64] {
        &self.log_likelihood[class.index()]
    }

    /// Reassembles a model from persisted parts, revalidating that the
    /// stored values are finite log-probabilities of the right shape.
    pub fn from_parts(
        log_prior: [f64; 2],
        log_likelihood: [Vec<f64>; 2],
        alpha: f64,
    ) -> Result<NbModel> {
        let vocab_size = log_likelihood[0].len();
        if log_likelihood[1].len() != vocab_size || vocab_size == 0 {
            return Err(Error::Artifact("likelihood tables must share a nonzero size".into()));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Artifact("smoothing parameter must be positive".into()));
        }
        let finite_logs = |v: &[f64]| v.iter().all(|x| x.is_finite() && *x <= 0.0);
        if !finite_logs(&log_prior) || !finite_logs(&log_likelihood[0]) || !finite_logs(&log_likelihood[1]) {
            return Err(Error::Artifact("log-probabilities must be finite and non-positive".into()));
        }
        Ok(NbModel {
            log_prior,
            log_likelihood,
            vocab_size,
            alpha,
        })
    }
}
