//! Pipelines (feature channel + classifier) and the majority-voting
//! ensemble over an odd number of them.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::classifiers::{
    predict_nb, predict_svm, train_nb, train_svm, NbModel, SvmModel, SvmOptions, DEFAULT_ALPHA,
    DEFAULT_C, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::corpus::{ClassLabel, Document, DEFAULT_SEED};
use crate::error::{Error, Result};
use crate::features::pos::{fallback_tag, pos_vector, Tagset};
use crate::features::{
    build_vocabulary, count_matrix, count_vector, tfidf_matrix, tfidf_vector, NgramOrder,
    TermDocMatrix, Vocabulary, Weighting,
};
use crate::lsi::{train_lsi, LsiModel, LsiOptions, SvdOptions, DEFAULT_SPRINKLE};
use crate::sparse::SparseVec;

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_c() -> f64 {
    DEFAULT_C
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}
fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}
fn default_true() -> bool {
    true
}
fn default_weight() -> f64 {
    1.0
}
fn default_sprinkle() -> usize {
    DEFAULT_SPRINKLE
}

/// Feature channel a pipeline trains on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ChannelSpec {
    UnigramCount,
    UnigramTfidf,
    BigramCount,
    Pos,
    Lsi {
        k: usize,
    },
    SprinkledLsi {
        k: usize,
        #[serde(default = "default_sprinkle")]
        s: usize,
    },
}

impl ChannelSpec {
    /// True for channels whose features are raw occurrence counts, the
    /// only input multinomial naive Bayes is defined on.
    pub fn is_count(self) -> bool {
        matches!(self, ChannelSpec::UnigramCount | ChannelSpec::BigramCount)
    }

    fn ngram_order(self) -> Option<NgramOrder> {
        match self {
            ChannelSpec::BigramCount => Some(NgramOrder::Bigram),
            ChannelSpec::Pos => None,
            _ => Some(NgramOrder::Unigram),
        }
    }

    /// Compact display form used in fingerprints and reports.
    pub fn describe(self) -> String {
        match self {
            ChannelSpec::UnigramCount => "unigram_count".into(),
            ChannelSpec::UnigramTfidf => "unigram_tfidf".into(),
            ChannelSpec::BigramCount => "bigram_count".into(),
            ChannelSpec::Pos => "pos".into(),
            ChannelSpec::Lsi { k } => format!("lsi(k={k})"),
            ChannelSpec::SprinkledLsi { k, s } => format!("sprinkled_lsi(k={k},s={s})"),
        }
    }
}

/// Classifier a pipeline trains, with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClassifierSpec {
    Nb {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    Svm {
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
    },
}

impl ClassifierSpec {
    /// Compact display form used in fingerprints and reports.
    pub fn describe(self) -> String {
        match self {
            ClassifierSpec::Nb { alpha } => format!("nb(alpha={alpha})"),
            ClassifierSpec::Svm { c, tol, max_iter } => {
                format!("svm(c={c},tol={tol},max_iter={max_iter})")
            }
        }
    }
}

/// One member pipeline: a feature channel, a classifier, and the
/// preprocessing knobs. `weight` is reserved for weighted voting and must
/// currently be 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub id: String,
    pub channel: ChannelSpec,
    pub classifier: ClassifierSpec,
    #[serde(default = "default_true")]
    pub stemming: bool,
    #[serde(default)]
    pub min_df: Option<u32>,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

impl PipelineSpec {
    /// The document-frequency floor in effect: the explicit value, or the
    /// channel's n-gram default.
    pub fn resolved_min_df(&self) -> u32 {
        self.min_df.unwrap_or_else(|| {
            self.channel
                .ngram_order()
                .map_or(1, NgramOrder::default_min_df)
        })
    }

    /// Rejects combinations the trainer cannot honor.
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::Config("member id must be non-empty".into()));
        }
        if matches!(self.classifier, ClassifierSpec::Nb { .. }) && !self.channel.is_count() {
            return Err(Error::Config(format!(
                "member {}: naive Bayes requires a count channel, got {}",
                self.id,
                self.channel.describe()
            )));
        }
        match self.channel {
            ChannelSpec::Lsi { k } | ChannelSpec::SprinkledLsi { k, .. } if k < 1 => {
                return Err(Error::Config(format!("member {}: rank must be at least 1", self.id)));
            }
            ChannelSpec::SprinkledLsi { s, .. } if s < 1 => {
                return Err(Error::Config(format!(
                    "member {}: sprinkle count must be at least 1",
                    self.id
                )));
            }
            _ => {}
        }
        if self.weight != 1.0 {
            return Err(Error::Config(format!(
                "member {}: vote weights other than 1 are reserved and not yet supported",
                self.id
            )));
        }
        if let Some(0) = self.min_df {
            return Err(Error::Config(format!(
                "member {}: min_df must be at least 1",
                self.id
            )));
        }
        Ok(())
    }

    /// Key=value pairs describing every hyperparameter of this member.
    pub fn fingerprint_entries(&self) -> Vec<(String, String)> {
        let p = format!("member.{}", self.id);
        vec![
            (format!("{p}.channel"), self.channel.describe()),
            (format!("{p}.classifier"), self.classifier.describe()),
            (format!("{p}.stemming"), self.stemming.to_string()),
            (format!("{p}.min_df"), self.resolved_min_df().to_string()),
            (format!("{p}.weight"), self.weight.to_string()),
        ]
    }
}

/// Corpus-level training knobs shared by every member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSettings {
    pub svd: SvdOptions,
    /// Weighting of the matrix LSI factors (counts by default).
    pub lsi_base: Weighting,
    /// Remove sprinkled rows (renormalizing) at projection time.
    pub desprinkle: bool,
    /// Tag untagged documents with the built-in heuristic tagger instead
    /// of failing.
    pub fallback_tagger: bool,
    /// Seed for classifier-level randomness (the SVM sweep order).
    pub seed: u64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            svd: SvdOptions::default(),
            lsi_base: Weighting::Count,
            desprinkle: false,
            fallback_tagger: false,
            seed: DEFAULT_SEED,
        }
    }
}

impl TrainSettings {
    /// Key=value pairs describing the shared training knobs.
    pub fn fingerprint_entries(&self) -> Vec<(String, String)> {
        vec![
            ("settings.svd.oversample".into(), self.svd.oversample.to_string()),
            ("settings.svd.tol".into(), self.svd.tol.to_string()),
            ("settings.svd.max_iter".into(), self.svd.max_iter.to_string()),
            ("settings.svd.seed".into(), self.svd.seed.to_string()),
            ("settings.lsi_base".into(), self.lsi_base.as_str().into()),
            ("settings.desprinkle".into(), self.desprinkle.to_string()),
            ("settings.fallback_tagger".into(), self.fallback_tagger.to_string()),
            ("settings.seed".into(), self.seed.to_string()),
        ]
    }
}

/// What a pipeline learned; the variants mirror the channel families.
#[derive(Debug, Clone)]
pub(crate) enum Learned {
    NbCounts(NbModel),
    SvmDirect(SvmModel),
    SvmLatent { lsi: LsiModel, svm: SvmModel },
}

/// A trained member: its spec, the fitted vocabulary (when the channel
/// has one), the learned models, and the ids of the documents it was
/// fitted on.
#[derive(Debug, Clone)]
pub struct TrainedPipeline {
    spec: PipelineSpec,
    vocab: Option<Arc<Vocabulary>>,
    tagset: Tagset,
    learned: Learned,
    fallback_tagger: bool,
    lsi_base: Weighting,
    train_ids: Vec<String>,
}

fn training_labels(train: &[&Document]) -> Result<Vec<ClassLabel>> {
    train
        .iter()
        .map(|d| {
            d.label.ok_or_else(|| Error::Document {
                doc: d.id.clone(),
                reason: "unlabeled document in training set".into(),
            })
        })
        .collect()
}

fn doc_tags(doc: &Document, fallback: bool) -> Result<Vec<String>> {
    match (&doc.tags, fallback) {
        (Some(tags), _) => Ok(tags.clone()),
        (None, true) => Ok(fallback_tag(&doc.tokens)),
        (None, false) => Err(Error::Document {
            doc: doc.id.clone(),
            reason: "no part-of-speech tags and the fallback tagger is disabled".into(),
        }),
    }
}

/// Scales latent coordinates to unit Euclidean norm (SVM conditioning);
/// the zero vector stays zero.
fn unit_sparse(coords: &DVector<f64>) -> SparseVec {
    let norm = coords.norm();
    if norm > 0.0 {
        let scaled: Vec<f64> = coords.iter().map(|v| v / norm).collect();
        SparseVec::from_dense(&scaled)
    } else {
        SparseVec::zeros(coords.len())
    }
}

fn svm_options(spec: &ClassifierSpec, seed: u64) -> SvmOptions {
    match *spec {
        ClassifierSpec::Svm { c, tol, max_iter } => SvmOptions {
            c,
            tol,
            max_iter,
            seed,
        },
        ClassifierSpec::Nb { .. } => unreachable!("validated before training"),
    }
}

/// Trains one pipeline on the given documents.
pub fn train_pipeline(
    spec: &PipelineSpec,
    train: &[&Document],
    settings: &TrainSettings,
) -> Result<TrainedPipeline> {
    spec.validate()?;
    let labels = training_labels(train)?;
    let signs: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let tagset = Tagset::penn_treebank();

    let base = |order: NgramOrder| -> Result<(Arc<Vocabulary>, TermDocMatrix)> {
        let vocab = Arc::new(build_vocabulary(
            train,
            order,
            spec.resolved_min_df(),
            spec.stemming,
        )?);
        let counts = count_matrix(train, &vocab);
        Ok((vocab, counts))
    };

    let (vocab, learned) = match spec.channel {
        ChannelSpec::UnigramCount | ChannelSpec::BigramCount => {
            let order = spec.channel.ngram_order().expect("count channels have an order");
            let (vocab, counts) = base(order)?;
            let learned = match spec.classifier {
                ClassifierSpec::Nb { alpha } => Learned::NbCounts(train_nb(&counts, &labels, alpha)?),
                ClassifierSpec::Svm { .. } => {
                    let x: Vec<SparseVec> =
                        (0..counts.matrix.cols()).map(|j| counts.matrix.col_vec(j)).collect();
                    Learned::SvmDirect(train_svm(&x, &signs, &svm_options(&spec.classifier, settings.seed))?)
                }
            };
            (Some(vocab), learned)
        }
        ChannelSpec::UnigramTfidf => {
            let (vocab, counts) = base(NgramOrder::Unigram)?;
            let weighted = tfidf_matrix(&counts)?;
            let x: Vec<SparseVec> =
                (0..weighted.matrix.cols()).map(|j| weighted.matrix.col_vec(j)).collect();
            let svm = train_svm(&x, &signs, &svm_options(&spec.classifier, settings.seed))?;
            (Some(vocab), Learned::SvmDirect(svm))
        }
        ChannelSpec::Pos => {
            let x: Vec<SparseVec> = train
                .iter()
                .map(|d| Ok(pos_vector(&doc_tags(d, settings.fallback_tagger)?, &tagset)))
                .collect::<Result<_>>()?;
            let svm = train_svm(&x, &signs, &svm_options(&spec.classifier, settings.seed))?;
            (None, Learned::SvmDirect(svm))
        }
        ChannelSpec::Lsi { k } | ChannelSpec::SprinkledLsi { k, .. } => {
            let (vocab, counts) = base(NgramOrder::Unigram)?;
            let matrix = match settings.lsi_base {
                Weighting::Count => counts,
                Weighting::Tfidf => tfidf_matrix(&counts)?,
            };
            let sprinkle = match spec.channel {
                ChannelSpec::SprinkledLsi { s, .. } => Some(s),
                _ => None,
            };
            let lsi = train_lsi(
                &matrix,
                &labels,
                &LsiOptions {
                    k,
                    sprinkle,
                    desprinkle: settings.desprinkle,
                    svd: settings.svd,
                },
            )?;
            let x: Vec<SparseVec> = lsi
                .training_coordinates(&matrix)?
                .iter()
                .map(unit_sparse)
                .collect();
            let svm = train_svm(&x, &signs, &svm_options(&spec.classifier, settings.seed))?;
            (Some(vocab), Learned::SvmLatent { lsi, svm })
        }
    };

    let mut train_ids: Vec<String> = train.iter().map(|d| d.id.clone()).collect();
    train_ids.sort();
    Ok(TrainedPipeline {
        spec: spec.clone(),
        vocab,
        tagset,
        learned,
        fallback_tagger: settings.fallback_tagger,
        lsi_base: settings.lsi_base,
        train_ids,
    })
}

impl TrainedPipeline {
    pub fn spec(&self) -> &PipelineSpec {
        &self.spec
    }

    pub fn vocab(&self) -> Option<&Arc<Vocabulary>> {
        self.vocab.as_ref()
    }

    pub fn lsi(&self) -> Option<&LsiModel> {
        match &self.learned {
            Learned::SvmLatent { lsi, .. } => Some(lsi),
            _ => None,
        }
    }

    /// Sorted ids of the documents this member was fitted on.
    pub fn train_ids(&self) -> &[String] {
        &self.train_ids
    }

    pub(crate) fn learned(&self) -> &Learned {
        &self.learned
    }

    pub(crate) fn fallback_tagger(&self) -> bool {
        self.fallback_tagger
    }

    pub(crate) fn lsi_base(&self) -> Weighting {
        self.lsi_base
    }

    /// Reassembles a member from persisted parts, cross-checking that the
    /// learned models fit the spec's channel and classifier and that the
    /// feature dimensions line up with the vocabulary.
    pub(crate) fn from_artifact_parts(
        spec: PipelineSpec,
        vocab: Option<Arc<Vocabulary>>,
        learned: Learned,
        fallback_tagger: bool,
        lsi_base: Weighting,
        mut train_ids: Vec<String>,
    ) -> Result<TrainedPipeline> {
        spec.validate()?;
        let bad = |reason: &str| Err(Error::Artifact(format!("member {}: {reason}", spec.id)));
        let feature_dim = match (spec.channel, &vocab) {
            (ChannelSpec::Pos, None) => Tagset::penn_treebank().len(),
            (ChannelSpec::Pos, Some(_)) => return bad("tag channel does not use a vocabulary"),
            (_, Some(v)) => v.len(),
            (_, None) => return bad("channel requires a vocabulary"),
        };
        match (&spec.classifier, &learned) {
            (ClassifierSpec::Nb { .. }, Learned::NbCounts(model)) => {
                if model.vocab_size() != feature_dim {
                    return bad("likelihood table size disagrees with the vocabulary");
                }
            }
            (ClassifierSpec::Svm { .. }, Learned::SvmDirect(model)) => {
                if matches!(spec.channel, ChannelSpec::Lsi { .. } | ChannelSpec::SprinkledLsi { .. }) {
                    return bad("latent channel needs its factorization");
                }
                if model.w().len() != feature_dim {
                    return bad("weight vector length disagrees with the feature dimension");
                }
            }
            (ClassifierSpec::Svm { .. }, Learned::SvmLatent { lsi, svm }) => {
                let vocab = vocab.as_ref().expect("latent channels checked above");
                if lsi.n_terms() != vocab.len() || lsi.vocab_fingerprint() != vocab.fingerprint() {
                    return bad("factorization was built over a different vocabulary");
                }
                if svm.w().len() != lsi.k_eff() {
                    return bad("weight vector length disagrees with the latent rank");
                }
                match spec.channel {
                    ChannelSpec::Lsi { k } => {
                        if lsi.sprinkling().is_some() || lsi.k() != k {
                            return bad("factorization disagrees with the channel rank");
                        }
                    }
                    ChannelSpec::SprinkledLsi { k, s } => {
                        let info = lsi.sprinkling();
                        if lsi.k() != k || info.map(|i| i.per_class) != Some(s) {
                            return bad("factorization disagrees with the channel rank");
                        }
                    }
                    _ => return bad("direct channel cannot carry a factorization"),
                }
                if lsi.base_weighting() != lsi_base {
                    return bad("factorization base weighting disagrees with the settings");
                }
            }
            _ => return bad("classifier and learned model kinds disagree"),
        }
        train_ids.sort();
        Ok(TrainedPipeline {
            spec,
            vocab,
            tagset: Tagset::penn_treebank(),
            learned,
            fallback_tagger,
            lsi_base,
            train_ids,
        })
    }

    fn features_for(&self, doc: &Document) -> Result<SparseVec> {
        let vocab = || self.vocab.as_deref().expect("channel carries a vocabulary");
        match self.spec.channel {
            ChannelSpec::UnigramCount | ChannelSpec::BigramCount => {
                Ok(count_vector(doc, vocab()))
            }
            ChannelSpec::UnigramTfidf => Ok(tfidf_vector(doc, vocab())),
            ChannelSpec::Pos => Ok(pos_vector(
                &doc_tags(doc, self.fallback_tagger)?,
                &self.tagset,
            )),
            ChannelSpec::Lsi { .. } | ChannelSpec::SprinkledLsi { .. } => {
                let lsi = match &self.learned {
                    Learned::SvmLatent { lsi, .. } => lsi,
                    _ => unreachable!("latent channels train an LSI model"),
                };
                let base = match self.lsi_base {
                    Weighting::Count => count_vector(doc, vocab()),
                    Weighting::Tfidf => tfidf_vector(doc, vocab()),
                };
                Ok(unit_sparse(&lsi.fold_in(&base)?))
            }
        }
    }

    /// Classifies one document; the score is the SVM margin or the naive
    /// Bayes log-posterior difference, positive toward `truthful`.
    pub fn predict(&self, doc: &Document) -> Result<(ClassLabel, f64)> {
        let x = self.features_for(doc)?;
        match &self.learned {
            Learned::NbCounts(model) => {
                let (label, scores) = predict_nb(model, &x);
                Ok((label, scores[ClassLabel::Truthful.index()] - scores[ClassLabel::Deceptive.index()]))
            }
            Learned::SvmDirect(model) | Learned::SvmLatent { svm: model, .. } => {
                predict_svm(model, &x)
            }
        }
    }
}

/// Majority vote over an odd number of labels.
pub fn vote(predictions: &[ClassLabel]) -> Result<ClassLabel> {
    if predictions.is_empty() || predictions.len() % 2 == 0 {
        return Err(Error::Param {
            name: "predictions",
            reason: format!(
                "majority voting needs an odd number of votes, got {}",
                predictions.len()
            ),
        });
    }
    let deceptive = predictions
        .iter()
        .filter(|&&l| l == ClassLabel::Deceptive)
        .count();
    Ok(if deceptive * 2 > predictions.len() {
        ClassLabel::Deceptive
    } else {
        ClassLabel::Truthful
    })
}

/// One ensemble decision: each member's vote, the tally per class, and
/// the majority outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteRecord {
    pub member_votes: Vec<(String, ClassLabel)>,
    pub final_label: ClassLabel,
    /// Votes per class, indexed by [`ClassLabel::index`].
    pub tally: [u32; 2],
}

/// Independently trained member pipelines voting by strict majority.
#[derive(Debug, Clone)]
pub struct EnsembleModel {
    members: Vec<TrainedPipeline>,
    train_ids: Vec<String>,
}

/// Trains every member on the same documents. The member count must be
/// odd so a strict majority always exists; a member's failure aborts the
/// whole ensemble with that member named.
pub fn train_ensemble(
    specs: &[PipelineSpec],
    train: &[&Document],
    settings: &TrainSettings,
) -> Result<EnsembleModel> {
    if specs.is_empty() || specs.len() % 2 == 0 {
        return Err(Error::Param {
            name: "specs",
            reason: format!("ensemble needs an odd number of members, got {}", specs.len()),
        });
    }
    let members = specs
        .iter()
        .map(|spec| {
            train_pipeline(spec, train, settings).map_err(|e| Error::Member {
                id: spec.id.clone(),
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut train_ids: Vec<String> = train.iter().map(|d| d.id.clone()).collect();
    train_ids.sort();
    Ok(EnsembleModel { members, train_ids })
}

impl EnsembleModel {
    pub fn members(&self) -> &[TrainedPipeline] {
        &self.members
    }

    /// Sorted ids of the documents the ensemble was fitted on.
    pub fn train_ids(&self) -> &[String] {
        &self.train_ids
    }

    /// Builds an ensemble from already-trained members (artifact loading).
    pub fn from_members(members: Vec<TrainedPipeline>, train_ids: Vec<String>) -> Result<Self> {
        if members.is_empty() || members.len() % 2 == 0 {
            return Err(Error::Artifact(format!(
                "ensemble needs an odd number of members, got {}",
                members.len()
            )));
        }
        Ok(EnsembleModel { members, train_ids })
    }

    /// Classifies one document by majority vote, recording every member's
    /// individual decision.
    pub fn predict(&self, doc: &Document) -> Result<VoteRecord> {
        let mut member_votes = Vec::with_capacity(self.members.len());
        let mut tally = [0u32; 2];
        for member in &self.members {
            let (label, _) = member.predict(doc).map_err(|e| Error::Member {
                id: member.spec.id.clone(),
                source: Box::new(e),
            })?;
            tally[label.index()] += 1;
            member_votes.push((member.spec.id.clone(), label));
        }
        let final_label = vote(&member_votes.iter().map(|(_, l)| *l).collect::<Vec<_>>())?;
        Ok(VoteRecord {
            member_votes,
            final_label,
            tally,
        })
    }
}

/// The standard five-member roster: sprinkled LSI + SVM at ranks 500 and
/// 300, unigram counts + SVM, unigram tf-idf + SVM, and unigram counts +
/// naive Bayes.
pub fn default_members() -> Vec<PipelineSpec> {
    let svm = ClassifierSpec::Svm {
        c: DEFAULT_C,
        tol: DEFAULT_TOL,
        max_iter: DEFAULT_MAX_ITER,
    };
    let member = |id: &str, channel: ChannelSpec, classifier: ClassifierSpec| PipelineSpec {
        id: id.to_string(),
        channel,
        classifier,
        stemming: true,
        min_df: None,
        weight: 1.0,
    };
    vec![
        member(
            "sprinkle_svm_500",
            ChannelSpec::SprinkledLsi {
                k: 500,
                s: DEFAULT_SPRINKLE,
            },
            svm,
        ),
        member(
            "sprinkle_svm_300",
            ChannelSpec::SprinkledLsi {
                k: 300,
                s: DEFAULT_SPRINKLE,
            },
            svm,
        ),
        member("unigram_svm", ChannelSpec::UnigramCount, svm),
        member("tfidf_svm", ChannelSpec::UnigramTfidf, svm),
        member(
            "unigram_nb",
            ChannelSpec::UnigramCount,
            ClassifierSpec::Nb {
                alpha: DEFAULT_ALPHA,
            },
        ),
    ]
}

#[derive(Debug, Serialize, Deserialize)]
struct EnsembleConfigFile {
    #[serde(rename = "member")]
    members: Vec<PipelineSpec>,
}

/// Parses a TOML ensemble description: a list of `[[member]]` tables,
/// each a [`PipelineSpec`]. Member validation runs on every entry; the
/// odd-count rule is enforced at training time so partial lists can be
/// composed.
pub fn parse_ensemble_config(text: &str) -> Result<Vec<PipelineSpec>> {
    let file: EnsembleConfigFile =
        toml::from_str(text).map_err(|e| Error::Config(format!("ensemble config: {e}")))?;
    if file.members.is_empty() {
        return Err(Error::Config("ensemble config declares no members".into()));
    }
    for member in &file.members {
        member.validate()?;
    }
    Ok(file.members)
}

/// Serializes member specs back to the TOML config format.
pub fn write_ensemble_config(members: &[PipelineSpec]) -> String {
    let file = EnsembleConfigFile {
        members: members.to_vec(),
    };
    toml::to_string(&file).expect("specs are plain data")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, text: &str, label: ClassLabel) -> Document {
        Document::from_text(id, text, Some(label))
    }

    fn tiny_corpus() -> Vec<Document> {
        let d = ClassLabel::Deceptive;
        let t = ClassLabel::Truthful;
        vec![
            doc("d0", "my husband loved the amazing luxury hotel", d),
            doc("d1", "amazing luxury trip my husband will return", d),
            doc("d2", "my amazing vacation experience wonderful hotel", d),
            doc("d3", "wonderful luxury experience will visit again", d),
            doc("t0", "the room was clean but the street was loud", t),
            doc("t1", "front desk slow room small street noise", t),
            doc("t2", "bathroom floor clean desk near elevator", t),
            doc("t3", "small room thin walls noise from street", t),
        ]
    }

    #[test]
    fn vote_follows_the_strict_majority() {
        use ClassLabel::{Deceptive as D, Truthful as T};
        assert_eq!(vote(&[D, D, D, T, T]).unwrap(), D);
        assert_eq!(vote(&[T, T, T, T, T]).unwrap(), T);
        assert_eq!(vote(&[T]).unwrap(), T);
    }

    #[test]
    fn vote_rejects_even_or_empty_input() {
        use ClassLabel::{Deceptive as D, Truthful as T};
        assert!(vote(&[]).is_err());
        assert!(vote(&[D, T]).is_err());
        assert!(vote(&[D, D, T, T]).is_err());
    }

    #[test]
    fn default_roster_has_five_members() {
        let members = default_members();
        assert_eq!(members.len(), 5);
        for m in &members {
            m.validate().unwrap();
        }
        assert!(matches!(
            members[0].channel,
            ChannelSpec::SprinkledLsi { k: 500, .. }
        ));
        assert!(matches!(members[4].classifier, ClassifierSpec::Nb { .. }));
    }

    #[test]
    fn config_round_trips_through_toml() {
        let members = default_members();
        let text = write_ensemble_config(&members);
        let parsed = parse_ensemble_config(&text).unwrap();
        assert_eq!(parsed, members);
    }

    #[test]
    fn config_defaults_fill_in() {
        let text = r#"
[[member]]
id = "m1"
channel = { type = "unigram_count" }
classifier = { type = "svm" }
"#;
        let members = parse_ensemble_config(text).unwrap();
        assert_eq!(members.len(), 1);
        assert!(members[0].stemming);
        assert_eq!(members[0].weight, 1.0);
        assert_eq!(members[0].resolved_min_df(), 1);
        assert!(matches!(
            members[0].classifier,
            ClassifierSpec::Svm { c, tol, max_iter } if c == 1.0 && tol == 1e-4 && max_iter == 1000
        ));
    }

    #[test]
    fn bigram_min_df_defaults_to_two() {
        let spec = PipelineSpec {
            id: "b".into(),
            channel: ChannelSpec::BigramCount,
            classifier: ClassifierSpec::Nb { alpha: 1.0 },
            stemming: true,
            min_df: None,
            weight: 1.0,
        };
        assert_eq!(spec.resolved_min_df(), 2);
    }

    #[test]
    fn config_validation_rejects_bad_members() {
        let nb_on_tfidf = r#"
[[member]]
id = "bad"
channel = { type = "unigram_tfidf" }
classifier = { type = "nb" }
"#;
        assert!(parse_ensemble_config(nb_on_tfidf).is_err());

        let nb_on_lsi = r#"
[[member]]
id = "bad"
channel = { type = "lsi", k = 5 }
classifier = { type = "nb" }
"#;
        assert!(parse_ensemble_config(nb_on_lsi).is_err());

        let weighted = r#"
[[member]]
id = "bad"
channel = { type = "unigram_count" }
classifier = { type = "svm" }
weight = 2.0
"#;
        assert!(parse_ensemble_config(weighted).is_err());

        let zero_sprinkle = r#"
[[member]]
id = "bad"
channel = { type = "sprinkled_lsi", k = 5, s = 0 }
classifier = { type = "svm" }
"#;
        assert!(parse_ensemble_config(zero_sprinkle).is_err());

        assert!(parse_ensemble_config("").is_err());
        assert!(parse_ensemble_config("[[member]]\nid = \"x\"\n").is_err());
    }

    #[test]
    fn even_member_count_is_rejected() {
        let specs: Vec<PipelineSpec> = default_members().into_iter().take(4).collect();
        let docs = tiny_corpus();
        let refs: Vec<&Document> = docs.iter().collect();
        assert!(train_ensemble(&specs, &refs, &TrainSettings::default()).is_err());
    }

    #[test]
    fn identical_specs_are_legal_and_unanimous() {
        let one = PipelineSpec {
            id: "same".into(),
            channel: ChannelSpec::UnigramCount,
            classifier: ClassifierSpec::Nb { alpha: 1.0 },
            stemming: true,
            min_df: None,
            weight: 1.0,
        };
        let specs = vec![one.clone(), one.clone(), one];
        let docs = tiny_corpus();
        let refs: Vec<&Document> = docs.iter().collect();
        let model = train_ensemble(&specs, &refs, &TrainSettings::default()).unwrap();
        let record = model.predict(&docs[0]).unwrap();
        assert_eq!(record.tally[record.final_label.index()], 3);
    }

    #[test]
    fn member_failure_names_the_member() {
        let mut specs = vec![
            default_members()[2].clone(),
            default_members()[3].clone(),
            default_members()[4].clone(),
        ];
        specs[0].channel = ChannelSpec::Lsi { k: 500 };
        specs[0].id = "oversized_rank".into();
        let docs = tiny_corpus();
        let refs: Vec<&Document> = docs.iter().collect();
        let err = train_ensemble(&specs, &refs, &TrainSettings::default()).unwrap_err();
        assert!(err.to_string().contains("oversized_rank"), "{err}");
    }

    #[test]
    fn small_ensemble_trains_and_votes() {
        let specs = vec![
            PipelineSpec {
                id: "lsi2".into(),
                channel: ChannelSpec::SprinkledLsi { k: 2, s: 2 },
                classifier: ClassifierSpec::Svm {
                    c: 1.0,
                    tol: 1e-4,
                    max_iter: 1000,
                },
                stemming: true,
                min_df: None,
                weight: 1.0,
            },
            default_members()[2].clone(),
            default_members()[3].clone(),
            default_members()[4].clone(),
            PipelineSpec {
                id: "bigram_nb".into(),
                channel: ChannelSpec::BigramCount,
                classifier: ClassifierSpec::Nb { alpha: 1.0 },
                stemming: true,
                min_df: Some(1),
                weight: 1.0,
            },
        ];
        let docs = tiny_corpus();
        let refs: Vec<&Document> = docs.iter().collect();
        let model = train_ensemble(&specs, &refs, &TrainSettings::default()).unwrap();
        assert_eq!(model.members().len(), 5);
        assert_eq!(model.train_ids().len(), 8);

        let probe = Document::from_text("q", "my husband loved the luxury experience", None);
        let record = model.predict(&probe).unwrap();
        assert_eq!(record.member_votes.len(), 5);
        assert_eq!(record.tally[0] + record.tally[1], 5);
        let majority = if record.tally[0] > record.tally[1] {
            ClassLabel::Deceptive
        } else {
            ClassLabel::Truthful
        };
        assert_eq!(record.final_label, majority);
    }

    #[test]
    fn pos_channel_requires_tags_or_fallback() {
        let spec = PipelineSpec {
            id: "pos".into(),
            channel: ChannelSpec::Pos,
            classifier: ClassifierSpec::Svm {
                c: 1.0,
                tol: 1e-4,
                max_iter: 1000,
            },
            stemming: true,
            min_df: None,
            weight: 1.0,
        };
        let docs = tiny_corpus();
        let refs: Vec<&Document> = docs.iter().collect();
        assert!(train_pipeline(&spec, &refs, &TrainSettings::default()).is_err());
        let with_fallback = TrainSettings {
            fallback_tagger: true,
            ..TrainSettings::default()
        };
        let model = train_pipeline(&spec, &refs, &with_fallback).unwrap();
        let (label, _) = model.predict(&docs[0]).unwrap();
        let _ = label;
    }

    #[test]
    fn retraining_with_the_same_seed_reproduces_votes() {
        let specs: Vec<PipelineSpec> = vec![
            default_members()[2].clone(),
            default_members()[3].clone(),
            default_members()[4].clone(),
        ];
        let docs = tiny_corpus();
        let refs: Vec<&Document> = docs.iter().collect();
        let a = train_ensemble(&specs, &refs, &TrainSettings::default()).unwrap();
        let b = train_ensemble(&specs, &refs, &TrainSettings::default()).unwrap();
        let probe = Document::from_text("q", "clean room near the street", None);
        assert_eq!(a.predict(&probe).unwrap(), b.predict(&probe).unwrap());
    }
}
