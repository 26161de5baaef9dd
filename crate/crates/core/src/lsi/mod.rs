//! Latent semantic indexing: truncated SVD of the term-document matrix,
//! optional class-label sprinkling, fold-in of unseen documents, and
//! inspection of the latent concepts.

pub mod svd;

pub use svd::{truncated_svd, SvdOptions, TruncatedSvd};

use nalgebra::{DMatrix, DVector};

use crate::corpus::ClassLabel;
use crate::error::{Error, Result};
use crate::features::{TermDocMatrix, Vocabulary, Weighting};
use crate::sparse::{CscMatrix, SparseVec};

/// Default pseudo-term rows appended per class when sprinkling.
pub const DEFAULT_SPRINKLE: usize = 10;

/// Record of how a training matrix was augmented with class pseudo-terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sprinkling {
    /// Pseudo-term rows appended per class.
    pub per_class: usize,
    /// Weight written into each pseudo-term entry: the mean positive
    /// entry of the unaugmented matrix, so the rows sit at the scale of
    /// real terms.
    pub weight: f64,
}

impl Sprinkling {
    /// Row indices carrying `class` labels, given the real-term count of
    /// the unaugmented matrix. Classes occupy consecutive blocks in
    /// [`ClassLabel::ALL`] order.
    pub fn class_rows(&self, n_terms: usize, class: ClassLabel) -> std::ops::Range<usize> {
        let start = n_terms + class.index() * self.per_class;
        start..start + self.per_class
    }

    /// Total appended rows.
    pub fn rows(&self) -> usize {
        self.per_class * ClassLabel::ALL.len()
    }
}

/// Appends `s` pseudo-term rows per class to a training matrix. Column j
/// gets weight `w` in each of its own class's rows and zero elsewhere,
/// where `w` is the matrix's mean positive entry.
pub fn sprinkle(
    matrix: &CscMatrix,
    labels: &[ClassLabel],
    s: usize,
) -> Result<(CscMatrix, Sprinkling)> {
    if s < 1 {
        return Err(Error::param("s", "sprinkle count must be at least 1"));
    }
    if labels.len() != matrix.cols() {
        return Err(Error::Dimension {
            expected: matrix.cols(),
            got: labels.len(),
        });
    }
    let weight = matrix
        .mean_positive()
        .ok_or_else(|| Error::param("matrix", "no positive entries to scale sprinkling by"))?;
    let info = Sprinkling { per_class: s, weight };
    let n_terms = matrix.rows();
    let rows = n_terms + info.rows();

    let columns: Vec<SparseVec> = (0..matrix.cols())
        .map(|j| {
            let mut pairs: Vec<(u32, f64)> = matrix.col_vec(j).iter().collect();
            for r in info.class_rows(n_terms, labels[j]) {
                pairs.push((r as u32, weight));
            }
            SparseVec::from_pairs(rows, pairs).expect("rows extended to cover sprinkle block")
        })
        .collect();
    Ok((CscMatrix::from_columns(rows, &columns)?, info))
}

/// Which end of a concept axis to rank terms from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
}

/// A trained latent-space model: the truncated factors, the sprinkling
/// applied to the training matrix (if any), and enough provenance to
/// refuse mismatched vocabularies at fold-in time.
#[derive(Debug, Clone)]
pub struct LsiModel {
    u: DMatrix<f64>,
    s: DVector<f64>,
    v: DMatrix<f64>,
    k: usize,
    reduced: bool,
    n_terms: usize,
    sprinkle: Option<Sprinkling>,
    desprinkle: bool,
    real_row_norms: Option<Vec<f64>>,
    vocab_fingerprint: [u8; 32],
    base_weighting: Weighting,
}

/// Training-time knobs for [`train_lsi`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsiOptions {
    /// Truncation rank.
    pub k: usize,
    /// Pseudo-term rows per class; `None` trains plain LSI.
    pub sprinkle: Option<usize>,
    /// Drop sprinkled rows (renormalizing U's columns over the real rows)
    /// when projecting documents, instead of keeping them at zero.
    pub desprinkle: bool,
    pub svd: SvdOptions,
}

impl Default for LsiOptions {
    fn default() -> Self {
        LsiOptions {
            k: 2,
            sprinkle: None,
            desprinkle: false,
            svd: SvdOptions::default(),
        }
    }
}

/// Factors a training term-document matrix, optionally sprinkled with
/// class pseudo-terms. `labels` must cover the matrix columns when
/// sprinkling is requested and is ignored otherwise.
pub fn train_lsi(
    tdm: &TermDocMatrix,
    labels: &[ClassLabel],
    opts: &LsiOptions,
) -> Result<LsiModel> {
    let (matrix, info) = match opts.sprinkle {
        Some(s) => {
            let (m, info) = sprinkle(&tdm.matrix, labels, s)?;
            (m, Some(info))
        }
        None => (tdm.matrix.clone(), None),
    };
    let f = truncated_svd(&matrix, opts.k, &opts.svd)?;
    if f.rank() == 0 {
        return Err(Error::param("matrix", "numerically zero matrix has no concepts"));
    }
    let n_terms = tdm.matrix.rows();
    let real_row_norms = if opts.desprinkle && info.is_some() {
        Some(real_row_norms(&f.u, n_terms))
    } else {
        None
    };
    Ok(LsiModel {
        u: f.u,
        s: f.s,
        v: f.v,
        k: opts.k,
        reduced: f.reduced,
        n_terms,
        sprinkle: info,
        desprinkle: opts.desprinkle,
        real_row_norms,
        vocab_fingerprint: tdm.vocab.fingerprint(),
        base_weighting: tdm.weighting,
    })
}

fn real_row_norms(u: &DMatrix<f64>, n_terms: usize) -> Vec<f64> {
    (0..u.ncols())
        .map(|c| {
            u.column(c)
                .rows(0, n_terms)
                .iter()
                .map(|e| e * e)
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

impl LsiModel {
    /// Requested truncation rank.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Rank actually realized; smaller than `k` when the matrix ran out
    /// of numerically nonzero singular values.
    pub fn k_eff(&self) -> usize {
        self.s.len()
    }

    /// True when `k_eff < k`.
    pub fn reduced(&self) -> bool {
        self.reduced
    }

    /// Real-term rows (the vocabulary size the model was trained over).
    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn sprinkling(&self) -> Option<Sprinkling> {
        self.sprinkle
    }

    pub fn desprinkle(&self) -> bool {
        self.desprinkle
    }

    pub fn base_weighting(&self) -> Weighting {
        self.base_weighting
    }

    pub fn vocab_fingerprint(&self) -> [u8; 32] {
        self.vocab_fingerprint
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn s(&self) -> &DVector<f64> {
        &self.s
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    /// Projects one document's term-weight vector into the latent space:
    /// q̂ = S⁻¹·Uᵀ·q. The vector is indexed by real terms only, so for
    /// sprinkled models the pseudo-term rows contribute nothing (unseen
    /// documents carry no label information). With desprinkling enabled
    /// the pseudo-term rows are instead cut out of U and each column is
    /// renormalized over the remaining rows.
    pub fn fold_in(&self, doc_vector: &SparseVec) -> Result<DVector<f64>> {
        if doc_vector.dim() != self.n_terms {
            return Err(Error::Dimension {
                expected: self.n_terms,
                got: doc_vector.dim(),
            });
        }
        let k = self.k_eff();
        let mut coords = DVector::zeros(k);
        for (t, w) in doc_vector.iter() {
            let row = self.u.row(t as usize);
            for c in 0..k {
                coords[c] += w * row[c];
            }
        }
        for c in 0..k {
            if let Some(norms) = &self.real_row_norms {
                if norms[c] < 1e-300 {
                    coords[c] = 0.0;
                    continue;
                }
                coords[c] /= norms[c];
            }
            coords[c] /= self.s[c];
        }
        Ok(coords)
    }

    /// Latent coordinates of the training documents, in column order of
    /// the training matrix. Plain models read them straight off V; with
    /// desprinkling enabled the raw columns are folded in instead so
    /// training and test documents share one projection.
    pub fn training_coordinates(&self, train: &TermDocMatrix) -> Result<Vec<DVector<f64>>> {
        if train.vocab.fingerprint() != self.vocab_fingerprint {
            return Err(Error::param("train", "vocabulary differs from the fitted one"));
        }
        if train.matrix.cols() != self.v.nrows() {
            return Err(Error::Dimension {
                expected: self.v.nrows(),
                got: train.matrix.cols(),
            });
        }
        if self.desprinkle && self.sprinkle.is_some() {
            (0..train.matrix.cols())
                .map(|j| self.fold_in(&train.matrix.col_vec(j)))
                .collect()
        } else {
            Ok((0..self.v.nrows())
                .map(|j| self.v.row(j).transpose())
                .collect())
        }
    }

    /// The `n` real terms loading strongest on one pole of a concept,
    /// ordered by descending magnitude. Sprinkled pseudo-terms never
    /// appear; `n` beyond the vocabulary returns the full ranking.
    pub fn top_terms(
        &self,
        vocab: &Vocabulary,
        concept: usize,
        polarity: Polarity,
        n: usize,
    ) -> Result<Vec<(String, f64)>> {
        if vocab.fingerprint() != self.vocab_fingerprint {
            return Err(Error::param("vocab", "vocabulary differs from the fitted one"));
        }
        if vocab.len() != self.n_terms {
            return Err(Error::Dimension {
                expected: self.n_terms,
                got: vocab.len(),
            });
        }
        if concept >= self.k_eff() {
            return Err(Error::Param {
                name: "concept",
                reason: format!("concept {concept} outside 0..{}", self.k_eff()),
            });
        }
        let sign = match polarity {
            Polarity::Positive => 1.0,
            Polarity::Negative => -1.0,
        };
        let mut ranked: Vec<(usize, f64)> = (0..self.n_terms)
            .map(|t| (t, self.u[(t, concept)]))
            .collect();
        ranked.sort_by(|a, b| (sign * b.1).total_cmp(&(sign * a.1)).then(a.0.cmp(&b.0)));
        ranked.truncate(n.min(self.n_terms));
        Ok(ranked
            .into_iter()
            .map(|(t, loading)| (vocab.term(t).to_string(), loading))
            .collect())
    }

    /// Restriction of the model to its leading `k` concepts. Because the
    /// triplets are ordered by descending singular value, the slice is
    /// itself the rank-k factorization of the same matrix, so one
    /// high-rank factorization can serve a whole grid of ranks.
    pub fn truncate(&self, k: usize) -> Result<LsiModel> {
        if k < 1 {
            return Err(Error::param("k", "rank must be at least 1"));
        }
        let k_eff = k.min(self.k_eff());
        Ok(LsiModel {
            u: self.u.columns(0, k_eff).into_owned(),
            s: self.s.rows(0, k_eff).into_owned(),
            v: self.v.columns(0, k_eff).into_owned(),
            k,
            reduced: k_eff < k,
            n_terms: self.n_terms,
            sprinkle: self.sprinkle,
            desprinkle: self.desprinkle,
            real_row_norms: self.real_row_norms.as_ref().map(|n| n[..k_eff].to_vec()),
            vocab_fingerprint: self.vocab_fingerprint,
            base_weighting: self.base_weighting,
        })
    }

    /// Reassembles a model from persisted parts, revalidating shapes.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        u: DMatrix<f64>,
        s: DVector<f64>,
        v: DMatrix<f64>,
        k: usize,
        n_terms: usize,
        sprinkle: Option<Sprinkling>,
        desprinkle: bool,
        vocab_fingerprint: [u8; 32],
        base_weighting: Weighting,
    ) -> Result<LsiModel> {
        let k_eff = s.len();
        if u.ncols() != k_eff || v.ncols() != k_eff {
            return Err(Error::Artifact("factor column counts disagree with S".into()));
        }
        if k_eff > k {
            return Err(Error::Artifact("more singular values than the requested rank".into()));
        }
        let expected_rows = sprinkle
            .map_or(Some(0), |i| i.per_class.checked_mul(ClassLabel::ALL.len()))
            .and_then(|rows| n_terms.checked_add(rows));
        if expected_rows != Some(u.nrows()) {
            return Err(Error::Artifact("U row count disagrees with terms + sprinkling".into()));
        }
        let mut prev = f64::INFINITY;
        for &sv in s.iter() {
            if !(sv > 0.0) || sv > prev {
                return Err(Error::Artifact(
                    "singular values must be positive and non-increasing".into(),
                ));
            }
            prev = sv;
        }
        let real_row_norms = if desprinkle && sprinkle.is_some() {
            Some(real_row_norms(&u, n_terms))
        } else {
            None
        };
        Ok(LsiModel {
            u,
            s,
            v,
            k,
            reduced: k_eff < k,
            n_terms,
            sprinkle,
            desprinkle,
            real_row_norms,
            vocab_fingerprint,
            base_weighting,
        })
    }
}
