//! Vocabulary building and sparse term-document matrices for the unigram,
//! bigram, tf-idf and POS feature channels.

pub mod pos;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::sparse::{CscMatrix, SparseVec};

/// Separator between the two stems of a bigram term. Cannot occur inside
/// a stem: the tokenizer splits on every non-alphanumeric character.
pub const BIGRAM_JOINER: char = '_';

/// N-gram order of a vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NgramOrder {
    Unigram,
    Bigram,
}

impl NgramOrder {
    /// Document-frequency floor used when a config leaves min_df unset:
    /// bigram tables otherwise fill up with pairs seen once.
    pub fn default_min_df(self) -> u32 {
        match self {
            NgramOrder::Unigram => 1,
            NgramOrder::Bigram => 2,
        }
    }
}

/// How the entries of a term-document matrix are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Count,
    Tfidf,
}

impl Weighting {
    pub fn as_str(self) -> &'static str {
        match self {
            Weighting::Count => "count",
            Weighting::Tfidf => "tfidf",
        }
    }
}

/// A term index fit on training documents only: lexicographically ordered
/// terms, per-term document frequencies, and the training document count
/// N that anchors idf.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
    df: Vec<u32>,
    n_docs: usize,
    order: NgramOrder,
    stemmed: bool,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, t: usize) -> &str {
        &self.terms[t]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn df(&self, t: usize) -> u32 {
        self.df[t]
    }

    pub fn df_table(&self) -> &[u32] {
        &self.df
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn order(&self) -> NgramOrder {
        self.order
    }

    pub fn stemmed(&self) -> bool {
        self.stemmed
    }

    /// Inverse document frequency ln(N / df) of term `t`.
    pub fn idf(&self, t: usize) -> f64 {
        (self.n_docs as f64 / self.df[t] as f64).ln()
    }

    /// SHA-256 over terms, document frequencies and N; identifies the
    /// vocabulary a model was fit against.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(u64::try_from(self.n_docs).unwrap_or(u64::MAX).to_le_bytes());
        for (term, df) in self.terms.iter().zip(&self.df) {
            h.update(term.as_bytes());
            h.update([0u8]);
            h.update(df.to_le_bytes());
        }
        h.finalize().into()
    }

    /// Reassembles a vocabulary from persisted parts, revalidating the
    /// invariants.
    pub fn from_parts(
        terms: Vec<String>,
        df: Vec<u32>,
        n_docs: usize,
        order: NgramOrder,
        stemmed: bool,
    ) -> Result<Self> {
        if terms.len() != df.len() {
            return Err(Error::Artifact("vocabulary term/df length mismatch".into()));
        }
        if terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Artifact("vocabulary terms not strictly sorted".into()));
        }
        if df.iter().any(|&d| d == 0 || d as usize > n_docs) {
            return Err(Error::Artifact("vocabulary df outside [1, N]".into()));
        }
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Ok(Vocabulary {
            terms,
            index,
            df,
            n_docs,
            order,
            stemmed,
        })
    }
}

/// The term sequence a document contributes to a vocabulary of the given
/// order: stems (or raw tokens) for unigrams, adjacent pairs joined by
/// `_` for bigrams.
fn doc_terms(doc: &Document, order: NgramOrder, stemmed: bool) -> Vec<String> {
    let base: &[String] = if stemmed { &doc.stems } else { &doc.tokens };
    match order {
        NgramOrder::Unigram => base.to_vec(),
        NgramOrder::Bigram => base
            .windows(2)
            .map(|w| format!("{}{}{}", w[0], BIGRAM_JOINER, w[1]))
            .collect(),
    }
}

/// Builds a vocabulary from training documents. Terms below `min_df`
/// (document frequency) are dropped; the surviving terms are indexed in
/// lexicographic order.
pub fn build_vocabulary(
    train: &[&Document],
    order: NgramOrder,
    min_df: u32,
    stemmed: bool,
) -> Result<Vocabulary> {
    if train.is_empty() {
        return Err(Error::param("train", "empty training set"));
    }
    if min_df < 1 {
        return Err(Error::param("min_df", "must be at least 1"));
    }
    let mut df_map: BTreeMap<String, u32> = BTreeMap::new();
    for doc in train {
        let mut seen: Vec<String> = doc_terms(doc, order, stemmed);
        seen.sort();
        seen.dedup();
        for term in seen {
            *df_map.entry(term).or_insert(0) += 1;
        }
    }
    let mut terms = Vec::new();
    let mut df = Vec::new();
    for (term, freq) in df_map {
        if freq >= min_df {
            terms.push(term);
            df.push(freq);
        }
    }
    if terms.is_empty() {
        return Err(Error::param(
            "min_df",
            format!("no term reaches document frequency {min_df}"),
        ));
    }
    let index = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i as u32))
        .collect();
    Ok(Vocabulary {
        terms,
        index,
        df,
        n_docs: train.len(),
        order,
        stemmed,
    })
}

/// Sparse terms-by-documents matrix tied to its vocabulary.
#[derive(Debug, Clone)]
pub struct TermDocMatrix {
    pub vocab: Arc<Vocabulary>,
    pub doc_ids: Vec<String>,
    pub matrix: CscMatrix,
    pub weighting: Weighting,
}

/// Raw occurrence counts of vocabulary terms per document; out-of-vocabulary
/// terms are ignored.
pub fn count_matrix(docs: &[&Document], vocab: &Arc<Vocabulary>) -> TermDocMatrix {
    let columns: Vec<SparseVec> = docs.iter().map(|d| count_vector(d, vocab)).collect();
    let matrix = CscMatrix::from_columns(vocab.len(), &columns)
        .expect("count vectors share the vocabulary dimension");
    TermDocMatrix {
        vocab: Arc::clone(vocab),
        doc_ids: docs.iter().map(|d| d.id.clone()).collect(),
        matrix,
        weighting: Weighting::Count,
    }
}

/// One document's raw count vector over `vocab`.
pub fn count_vector(doc: &Document, vocab: &Vocabulary) -> SparseVec {
    let mut counts: HashMap<u32, f64> = HashMap::new();
    for term in doc_terms(doc, vocab.order, vocab.stemmed) {
        if let Some(t) = vocab.index_of(&term) {
            *counts.entry(t).or_insert(0.0) += 1.0;
        }
    }
    SparseVec::from_pairs(vocab.len(), counts).expect("indices come from the vocabulary")
}

/// Reweights raw counts as tf*ln(N/df), with N and df frozen from the
/// vocabulary's training documents. Entries of terms present in every
/// training document vanish (idf = 0).
pub fn tfidf_matrix(counts: &TermDocMatrix) -> Result<TermDocMatrix> {
    if counts.weighting != Weighting::Count {
        return Err(Error::Weighting {
            op: "tfidf_weight",
            required: "count",
            got: counts.weighting.as_str(),
        });
    }
    let vocab = &counts.vocab;
    let columns: Vec<SparseVec> = (0..counts.matrix.cols())
        .map(|j| {
            let scaled = counts
                .matrix
                .col_vec(j)
                .iter()
                .map(|(t, tf)| (t, tf * vocab.idf(t as usize)))
                .collect::<Vec<_>>();
            SparseVec::from_pairs(vocab.len(), scaled).expect("indices unchanged")
        })
        .collect();
    Ok(TermDocMatrix {
        vocab: Arc::clone(vocab),
        doc_ids: counts.doc_ids.clone(),
        matrix: CscMatrix::from_columns(vocab.len(), &columns).expect("dimension preserved"),
        weighting: Weighting::Tfidf,
    })
}

/// One document's tf-idf vector over `vocab` (training idf, see
/// `tfidf_matrix`).
pub fn tfidf_vector(doc: &Document, vocab: &Vocabulary) -> SparseVec {
    let scaled: Vec<(u32, f64)> = count_vector(doc, vocab)
        .iter()
        .map(|(t, tf)| (t, tf * vocab.idf(t as usize)))
        .collect();
    SparseVec::from_pairs(vocab.len(), scaled).expect("indices unchanged")
}

/// Parses a `.tags` sidecar: one `token<TAB>tag` pair per line, in
/// tokenizer order. Carriage returns are tolerated; empty lines are not.
pub fn parse_tags(content: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (lineno, raw) in content.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() {
            if lineno + 1 == content.lines().count() {
                continue;
            }
            return Err(Error::Config(format!("tags line {}: empty line", lineno + 1)));
        }
        let mut fields = line.split('\t');
        let token = fields.next().unwrap_or("");
        let tag = fields.next().unwrap_or("");
        if token.is_empty() || tag.is_empty() || fields.next().is_some() {
            return Err(Error::Config(format!(
                "tags line {}: expected `token<TAB>tag`",
                lineno + 1
            )));
        }
        pairs.push((token.to_string(), tag.to_string()));
    }
    Ok(pairs)
}

/// Size caps for [`parse_matrix_dump`], keeping hostile headers from
/// forcing huge allocations.
const DUMP_MAX_DIM: usize = 1 << 24;
const DUMP_MAX_NNZ: usize = 1 << 26;

/// Writes the coordinate-format debug dump: a `rows cols nnz` header, then
/// one `term_index doc_index weight` triple per line in column order.
pub fn write_matrix_dump(m: &CscMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", m.rows(), m.cols(), m.nnz());
    for (r, c, v) in m.triples() {
        let _ = writeln!(out, "{r} {c} {v:.17e}");
    }
    out
}

/// Parses the coordinate-format dump back into a matrix. The header must
/// match the body exactly; indices are bounds-checked and duplicate
/// coordinates rejected.
pub fn parse_matrix_dump(text: &str) -> Result<CscMatrix> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Artifact("empty matrix dump".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|f| f.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Artifact(format!("bad dump header: {e}")))?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(Error::Artifact("dump header must be `rows cols nnz`".into()));
    };
    if rows > DUMP_MAX_DIM || cols > DUMP_MAX_DIM || nnz > DUMP_MAX_NNZ {
        return Err(Error::Artifact("dump dimensions exceed supported size".into()));
    }

    let mut per_col: BTreeMap<usize, Vec<(u32, f64)>> = BTreeMap::new();
    let mut seen = 0usize;
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(r), Some(c), Some(v), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::Artifact(format!(
                "dump line {}: expected `row col value`",
                lineno + 2
            )));
        };
        let r: usize = r
            .parse()
            .map_err(|_| Error::Artifact(format!("dump line {}: bad row", lineno + 2)))?;
        let c: usize = c
            .parse()
            .map_err(|_| Error::Artifact(format!("dump line {}: bad col", lineno + 2)))?;
        let v: f64 = v
            .parse()
            .map_err(|_| Error::Artifact(format!("dump line {}: bad value", lineno + 2)))?;
        if r >= rows || c >= cols {
            return Err(Error::Artifact(format!(
                "dump line {}: index ({r}, {c}) outside {rows}x{cols}",
                lineno + 2
            )));
        }
        if !v.is_finite() || v == 0.0 {
            return Err(Error::Artifact(format!(
                "dump line {}: value must be finite and nonzero",
                lineno + 2
            )));
        }
        seen += 1;
        if seen > nnz {
            return Err(Error::Artifact("dump has more triples than the header claims".into()));
        }
        per_col.entry(c).or_default().push((r as u32, v));
    }
    if seen != nnz {
        return Err(Error::Artifact(format!(
            "dump header claims {nnz} triples, found {seen}"
        )));
    }

    let mut columns = vec![SparseVec::zeros(rows); cols];
    for (c, mut entries) in per_col {
        entries.sort_by_key(|&(r, _)| r);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Artifact(format!("duplicate coordinate in column {c}")));
        }
        columns[c] = SparseVec::from_pairs(rows, entries)?;
    }
    CscMatrix::from_columns(rows, &columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn doc(id: &str, text: &str) -> Document {
        Document::from_text(id, text, None)
    }

    fn vocab_of(texts: &[&str], order: NgramOrder, min_df: u32) -> Vocabulary {
        let docs: Vec<Document> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| doc(&format!("d{i}"), t))
            .collect();
        let refs: Vec<&Document> = docs.iter().collect();
        build_vocabulary(&refs, order, min_df, false).unwrap()
    }

    #[test]
    fn unigram_vocabulary_counts_df() {
        let v = vocab_of(&["a b", "b c"], NgramOrder::Unigram, 1);
        assert_eq!(v.terms(), &["a", "b", "c"]);
        assert_eq!(v.df_table(), &[1, 2, 1]);
        assert_eq!(v.n_docs(), 2);
    }

    #[test]
    fn bigram_vocabulary_joins_adjacent_terms() {
        let v = vocab_of(&["a b", "b c"], NgramOrder::Bigram, 1);
        assert_eq!(v.terms(), &["a_b", "b_c"]);
        assert_eq!(v.df_table(), &[1, 1]);
    }

    #[test]
    fn min_df_threshold_drops_terms() {
        let v = vocab_of(&["a b", "b c"], NgramOrder::Unigram, 2);
        assert_eq!(v.terms(), &["b"]);
    }

    #[test]
    fn empty_training_set_is_rejected() {
        assert!(build_vocabulary(&[], NgramOrder::Unigram, 1, false).is_err());
    }

    #[test]
    fn count_matrix_matches_hand_counts() {
        let docs = [doc("d0", "a a b"), doc("d1", "b c c")];
        let refs: Vec<&Document> = docs.iter().collect();
        let vocab = Arc::new(build_vocabulary(&refs, NgramOrder::Unigram, 1, false).unwrap());
        let tdm = count_matrix(&refs, &vocab);
        let dense = tdm.matrix.to_dense();
        assert_eq!(dense[(0, 0)], 2.0);
        assert_eq!(dense[(1, 0)], 1.0);
        assert_eq!(dense[(2, 0)], 0.0);
        assert_eq!(dense[(1, 1)], 1.0);
        assert_eq!(dense[(2, 1)], 2.0);
    }

    #[test]
    fn oov_terms_yield_zero_columns() {
        let train = [doc("d0", "a b")];
        let refs: Vec<&Document> = train.iter().collect();
        let vocab = Arc::new(build_vocabulary(&refs, NgramOrder::Unigram, 1, false).unwrap());
        let v = count_vector(&doc("q", "z z z"), &vocab);
        assert!(v.is_empty());
    }

    #[test]
    fn tfidf_formula_and_sparsity() {
        // 4 docs; term "a" in one doc with tf=2 -> 2*ln(4); "b" in all 4 -> 0.
        let docs = [doc("d0", "a a b"), doc("d1", "b"), doc("d2", "b"), doc("d3", "b")];
        let refs: Vec<&Document> = docs.iter().collect();
        let vocab = Arc::new(build_vocabulary(&refs, NgramOrder::Unigram, 1, false).unwrap());
        let tfidf = tfidf_matrix(&count_matrix(&refs, &vocab)).unwrap();
        let dense = tfidf.matrix.to_dense();
        assert_relative_eq!(dense[(0, 0)], 2.0 * 4.0f64.ln(), epsilon = 1e-12);
        for j in 0..4 {
            assert_eq!(dense[(1, j)], 0.0, "idf 0 entries must vanish");
        }
        assert_eq!(tfidf.weighting, Weighting::Tfidf);
    }

    #[test]
    fn tfidf_rejects_already_weighted_input() {
        let docs = [doc("d0", "a"), doc("d1", "a b")];
        let refs: Vec<&Document> = docs.iter().collect();
        let vocab = Arc::new(build_vocabulary(&refs, NgramOrder::Unigram, 1, false).unwrap());
        let once = tfidf_matrix(&count_matrix(&refs, &vocab)).unwrap();
        assert!(matches!(
            tfidf_matrix(&once),
            Err(Error::Weighting { .. })
        ));
    }

    #[test]
    fn idf_bounds_hold() {
        let v = vocab_of(&["a b c", "a b", "a d e", "b f"], NgramOrder::Unigram, 1);
        for t in 0..v.len() {
            let idf = v.idf(t);
            assert!((0.0..=(v.n_docs() as f64).ln()).contains(&idf));
        }
    }

    #[test]
    fn vocabulary_fingerprint_tracks_content() {
        let a = vocab_of(&["a b", "b c"], NgramOrder::Unigram, 1);
        let b = vocab_of(&["a b", "b c"], NgramOrder::Unigram, 1);
        let c = vocab_of(&["a b", "b d"], NgramOrder::Unigram, 1);
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn parse_tags_accepts_well_formed_input() {
        let pairs = parse_tags("the\tDT\nroom\tNN\n").unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[1], ("room".into(), "NN".into()));
    }

    #[test]
    fn parse_tags_rejects_malformed_lines() {
        assert!(parse_tags("no_tab_here\n").is_err());
        assert!(parse_tags("a\tNN\textra\n").is_err());
        assert!(parse_tags("\tNN\n").is_err());
    }

    #[test]
    fn matrix_dump_round_trips() {
        let docs = [doc("d0", "a a b"), doc("d1", "c")];
        let refs: Vec<&Document> = docs.iter().collect();
        let vocab = Arc::new(build_vocabulary(&refs, NgramOrder::Unigram, 1, false).unwrap());
        let tdm = count_matrix(&refs, &vocab);
        let dump = write_matrix_dump(&tdm.matrix);
        let parsed = parse_matrix_dump(&dump).unwrap();
        assert_eq!(parsed, tdm.matrix);
    }

    #[test]
    fn matrix_dump_parser_rejects_corruption() {
        assert!(parse_matrix_dump("").is_err());
        assert!(parse_matrix_dump("2 2").is_err());
        assert!(parse_matrix_dump("2 2 1\n5 0 1.0\n").is_err());
        assert!(parse_matrix_dump("2 2 2\n0 0 1.0\n").is_err());
        assert!(parse_matrix_dump("2 2 1\n0 0 1.0\n1 1 2.0\n").is_err());
        assert!(parse_matrix_dump("2 2 1\n0 0 nan\n").is_err());
        assert!(parse_matrix_dump("99999999999999999999 2 1\n").is_err());
    }
}
