//! Versioned binary model artifacts.
//!
//! Every artifact starts with the magic bytes, a format version, and a
//! kind tag; all integers are little-endian and floats are stored as raw
//! IEEE-754 bits, so a save/load round trip reproduces every coefficient
//! exactly. Loading revalidates every structural invariant and checks
//! all lengths against the remaining input before allocating, so the
//! loaders are safe on untrusted bytes.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::classifiers::{NbModel, SvmModel};
use crate::ensemble::{
    parse_ensemble_config, write_ensemble_config, EnsembleModel, Learned, TrainedPipeline,
};
use crate::error::{Error, Result};
use crate::features::{NgramOrder, Vocabulary, Weighting};
use crate::lsi::{LsiModel, Sprinkling};

const MAGIC: &[u8; 4] = b"OPSM";

/// Current artifact format version.
pub const ARTIFACT_VERSION: u16 = 1;

/// What an artifact contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArtifactKind {
    Lsi,
    Pipeline,
    Ensemble,
}

impl ArtifactKind {
    fn code(self) -> u8 {
        match self {
            ArtifactKind::Lsi => 1,
            ArtifactKind::Pipeline => 2,
            ArtifactKind::Ensemble => 3,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        match code {
            1 => Ok(ArtifactKind::Lsi),
            2 => Ok(ArtifactKind::Pipeline),
            3 => Ok(ArtifactKind::Ensemble),
            other => Err(Error::Artifact(format!("unknown artifact kind {other}"))),
        }
    }
}

/// Reads the header of an artifact without decoding the body.
pub fn peek_kind(bytes: &[u8]) -> Result<ArtifactKind> {
    let mut r = Reader::new(bytes);
    r.header()
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(kind: ArtifactKind) -> Writer {
        let mut buf = Vec::with_capacity(64);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&ARTIFACT_VERSION.to_le_bytes());
        buf.push(kind.code());
        Writer { buf }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn bool(&mut self, v: bool) {
        self.buf.push(v as u8);
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn str(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn f64_slice(&mut self, vs: &[f64]) {
        self.u64(vs.len() as u64);
        for &v in vs {
            self.f64(v);
        }
    }

    /// Column-major dense matrix.
    fn matrix(&mut self, m: &DMatrix<f64>) {
        self.u64(m.nrows() as u64);
        self.u64(m.ncols() as u64);
        for &v in m.as_slice() {
            self.f64(v);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Reader<'a> {
        Reader { buf, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(Error::Artifact("truncated artifact".into()));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn bool(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::Artifact(format!("invalid boolean byte {other}"))),
        }
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// A count of `elem_size`-byte elements, rejected when the payload
    /// could not possibly fit in the remaining input.
    fn count(&mut self, elem_size: usize) -> Result<usize> {
        let n = self.u64()?;
        let n = usize::try_from(n).map_err(|_| Error::Artifact("count overflow".into()))?;
        let needed = n
            .checked_mul(elem_size)
            .ok_or_else(|| Error::Artifact("count overflow".into()))?;
        if needed > self.remaining() {
            return Err(Error::Artifact("truncated artifact".into()));
        }
        Ok(n)
    }

    fn str(&mut self) -> Result<String> {
        let n = self.count(1)?;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| Error::Artifact("string is not valid UTF-8".into()))
    }

    fn f64_slice(&mut self) -> Result<Vec<f64>> {
        let n = self.count(8)?;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.f64()?);
        }
        Ok(out)
    }

    fn matrix(&mut self) -> Result<DMatrix<f64>> {
        let rows = self.count(1)?;
        let cols = self.count(1)?;
        let n = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::Artifact("count overflow".into()))?;
        if n > self.remaining() {
            return Err(Error::Artifact("truncated artifact".into()));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(self.f64()?);
        }
        Ok(DMatrix::from_column_slice(rows, cols, &data))
    }

    fn header(&mut self) -> Result<ArtifactKind> {
        let magic = self.take(4)?;
        if magic != MAGIC {
            return Err(Error::Artifact("bad magic bytes".into()));
        }
        let version = self.u16()?;
        if version != ARTIFACT_VERSION {
            return Err(Error::Artifact(format!(
                "unsupported artifact version {version} (expected {ARTIFACT_VERSION})"
            )));
        }
        ArtifactKind::from_code(self.u8()?)
    }

    fn finish(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::Artifact(format!(
                "{} trailing bytes after artifact body",
                self.remaining()
            )));
        }
        Ok(())
    }
}

fn weighting_code(w: Weighting) -> u8 {
    match w {
        Weighting::Count => 0,
        Weighting::Tfidf => 1,
    }
}

fn weighting_from(code: u8) -> Result<Weighting> {
    match code {
        0 => Ok(Weighting::Count),
        1 => Ok(Weighting::Tfidf),
        other => Err(Error::Artifact(format!("unknown weighting code {other}"))),
    }
}

fn write_lsi_body(w: &mut Writer, model: &LsiModel) {
    w.buf.extend_from_slice(&model.vocab_fingerprint());
    w.u8(weighting_code(model.base_weighting()));
    w.bool(model.desprinkle());
    w.u64(model.k() as u64);
    w.u64(model.n_terms() as u64);
    match model.sprinkling() {
        None => w.bool(false),
        Some(info) => {
            w.bool(true);
            w.u64(info.per_class as u64);
            w.f64(info.weight);
        }
    }
    w.matrix(model.u());
    w.f64_slice(model.s().as_slice());
    w.matrix(model.v());
}

fn read_lsi_body(r: &mut Reader) -> Result<LsiModel> {
    let fingerprint: [u8; 32] = r.take(32)?.try_into().unwrap();
    let base_weighting = weighting_from(r.u8()?)?;
    let desprinkle = r.bool()?;
    let k = usize::try_from(r.u64()?).map_err(|_| Error::Artifact("count overflow".into()))?;
    let n_terms = usize::try_from(r.u64()?).map_err(|_| Error::Artifact("count overflow".into()))?;
    let sprinkle = if r.bool()? {
        let per_class =
            usize::try_from(r.u64()?).map_err(|_| Error::Artifact("count overflow".into()))?;
        let weight = r.f64()?;
        if per_class == 0 || !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::Artifact("invalid sprinkling parameters".into()));
        }
        Some(Sprinkling { per_class, weight })
    } else {
        None
    };
    let u = r.matrix()?;
    let s = DVector::from_vec(r.f64_slice()?);
    let v = r.matrix()?;
    LsiModel::from_parts(u, s, v, k, n_terms, sprinkle, desprinkle, fingerprint, base_weighting)
}

/// Serializes a latent factorization.
pub fn save_lsi(model: &LsiModel) -> Vec<u8> {
    let mut w = Writer::new(ArtifactKind::Lsi);
    write_lsi_body(&mut w, model);
    w.buf
}

/// Loads a latent factorization, revalidating its invariants.
pub fn load_lsi(bytes: &[u8]) -> Result<LsiModel> {
    let mut r = Reader::new(bytes);
    if r.header()? != ArtifactKind::Lsi {
        return Err(Error::Artifact("artifact is not a factorization".into()));
    }
    let model = read_lsi_body(&mut r)?;
    r.finish()?;
    Ok(model)
}

fn write_nb_body(w: &mut Writer, model: &NbModel) {
    use crate::corpus::ClassLabel::{Deceptive, Truthful};
    w.f64(model.log_prior()[0]);
    w.f64(model.log_prior()[1]);
    w.f64_slice(model.log_likelihood(Deceptive));
    w.f64_slice(model.log_likelihood(Truthful));
    w.f64(model.alpha());
}

fn read_nb_body(r: &mut Reader) -> Result<NbModel> {
    let log_prior = [r.f64()?, r.f64()?];
    let ll_deceptive = r.f64_slice()?;
    let ll_truthful = r.f64_slice()?;
    let alpha = r.f64()?;
    NbModel::from_parts(log_prior, [ll_deceptive, ll_truthful], alpha)
}

fn write_svm_body(w: &mut Writer, model: &SvmModel) {
    w.f64_slice(model.w());
    w.f64(model.b());
    w.f64(model.c());
    w.u64(model.support().len() as u64);
    for &(i, alpha) in model.support() {
        w.u64(i as u64);
        w.f64(alpha);
    }
}

fn read_svm_body(r: &mut Reader) -> Result<SvmModel> {
    let weights = r.f64_slice()?;
    let b = r.f64()?;
    let c = r.f64()?;
    let n = r.count(16)?;
    let mut support = Vec::with_capacity(n);
    for _ in 0..n {
        let i = usize::try_from(r.u64()?).map_err(|_| Error::Artifact("count overflow".into()))?;
        support.push((i, r.f64()?));
    }
    SvmModel::from_parts(weights, b, c, support)
}

fn write_vocab_body(w: &mut Writer, vocab: &Vocabulary) {
    w.u64(vocab.len() as u64);
    for term in vocab.terms() {
        w.str(term);
    }
    w.u64(vocab.df_table().len() as u64);
    for &df in vocab.df_table() {
        w.u64(df as u64);
    }
    w.u64(vocab.n_docs() as u64);
    w.u8(match vocab.order() {
        NgramOrder::Unigram => 0,
        NgramOrder::Bigram => 1,
    });
    w.bool(vocab.stemmed());
}

fn read_vocab_body(r: &mut Reader) -> Result<Vocabulary> {
    let n_terms = r.count(8)?;
    let mut terms = Vec::with_capacity(n_terms);
    for _ in 0..n_terms {
        terms.push(r.str()?);
    }
    let n_df = r.count(8)?;
    let mut df = Vec::with_capacity(n_df);
    for _ in 0..n_df {
        let v = r.u64()?;
        df.push(u32::try_from(v).map_err(|_| Error::Artifact("df overflow".into()))?);
    }
    let n_docs = usize::try_from(r.u64()?).map_err(|_| Error::Artifact("count overflow".into()))?;
    let order = match r.u8()? {
        0 => NgramOrder::Unigram,
        1 => NgramOrder::Bigram,
        other => return Err(Error::Artifact(format!("unknown n-gram order {other}"))),
    };
    let stemmed = r.bool()?;
    Vocabulary::from_parts(terms, df, n_docs, order, stemmed)
}

fn write_pipeline_body(w: &mut Writer, p: &TrainedPipeline) {
    w.str(&write_ensemble_config(std::slice::from_ref(p.spec())));
    w.bool(p.fallback_tagger());
    w.u8(weighting_code(p.lsi_base()));
    w.u64(p.train_ids().len() as u64);
    for id in p.train_ids() {
        w.str(id);
    }
    match p.vocab() {
        None => w.bool(false),
        Some(v) => {
            w.bool(true);
            write_vocab_body(w, v);
        }
    }
    match p.learned() {
        Learned::NbCounts(model) => {
            w.u8(1);
            write_nb_body(w, model);
        }
        Learned::SvmDirect(model) => {
            w.u8(2);
            write_svm_body(w, model);
        }
        Learned::SvmLatent { lsi, svm } => {
            w.u8(3);
            write_lsi_body(w, lsi);
            write_svm_body(w, svm);
        }
    }
}

fn read_pipeline_body(r: &mut Reader) -> Result<TrainedPipeline> {
    let spec_text = r.str()?;
    let mut specs = parse_ensemble_config(&spec_text)?;
    if specs.len() != 1 {
        return Err(Error::Artifact(format!(
            "pipeline artifact embeds {} specs, expected 1",
            specs.len()
        )));
    }
    let spec = specs.remove(0);
    let fallback_tagger = r.bool()?;
    let lsi_base = weighting_from(r.u8()?)?;
    let n_ids = r.count(8)?;
    let mut train_ids = Vec::with_capacity(n_ids);
    for _ in 0..n_ids {
        train_ids.push(r.str()?);
    }
    let vocab = if r.bool()? {
        Some(Arc::new(read_vocab_body(r)?))
    } else {
        None
    };
    let learned = match r.u8()? {
        1 => Learned::NbCounts(read_nb_body(r)?),
        2 => Learned::SvmDirect(read_svm_body(r)?),
        3 => Learned::SvmLatent {
            lsi: read_lsi_body(r)?,
            svm: read_svm_body(r)?,
        },
        other => return Err(Error::Artifact(format!("unknown model kind {other}"))),
    };
    TrainedPipeline::from_artifact_parts(spec, vocab, learned, fallback_tagger, lsi_base, train_ids)
}

/// Serializes one trained member pipeline.
pub fn save_pipeline(p: &TrainedPipeline) -> Vec<u8> {
    let mut w = Writer::new(ArtifactKind::Pipeline);
    write_pipeline_body(&mut w, p);
    w.buf
}

/// Loads one trained member pipeline.
pub fn load_pipeline(bytes: &[u8]) -> Result<TrainedPipeline> {
    let mut r = Reader::new(bytes);
    if r.header()? != ArtifactKind::Pipeline {
        return Err(Error::Artifact("artifact is not a pipeline".into()));
    }
    let p = read_pipeline_body(&mut r)?;
    r.finish()?;
    Ok(p)
}

/// Serializes a trained voting ensemble.
pub fn save_ensemble(e: &EnsembleModel) -> Vec<u8> {
    let mut w = Writer::new(ArtifactKind::Ensemble);
    w.u64(e.train_ids().len() as u64);
    for id in e.train_ids() {
        w.str(id);
    }
    w.u64(e.members().len() as u64);
    for member in e.members() {
        write_pipeline_body(&mut w, member);
    }
    w.buf
}

/// Loads a trained voting ensemble.
pub fn load_ensemble(bytes: &[u8]) -> Result<EnsembleModel> {
    let mut r = Reader::new(bytes);
    if r.header()? != ArtifactKind::Ensemble {
        return Err(Error::Artifact("artifact is not an ensemble".into()));
    }
    let n_ids = r.count(8)?;
    let mut train_ids = Vec::with_capacity(n_ids);
    for _ in 0..n_ids {
        train_ids.push(r.str()?);
    }
    let n_members = r.count(1)?;
    let mut members = Vec::with_capacity(n_members);
    for _ in 0..n_members {
        members.push(read_pipeline_body(&mut r)?);
    }
    r.finish()?;
    EnsembleModel::from_members(members, train_ids)
}
