//! Cross-validated evaluation: confusion-matrix metrics, the k-fold
//! harness, the latent-rank sweep, and delimited report files.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::corpus::{ClassLabel, Corpus, Document, Split};
use crate::ensemble::{
    train_ensemble, train_pipeline, EnsembleModel, PipelineSpec, TrainedPipeline, TrainSettings,
};
use crate::error::{Error, Result};
use crate::features::{build_vocabulary, count_matrix, count_vector, tfidf_matrix, tfidf_vector, NgramOrder, Weighting};
use crate::lsi::{train_lsi, LsiOptions, DEFAULT_SPRINKLE};
use crate::classifiers::{predict_svm, train_svm, SvmOptions};
use crate::sparse::SparseVec;

/// 2x2 contingency table indexed `[true label][predicted label]` via
/// [`ClassLabel::index`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: [[usize; 2]; 2],
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: ClassLabel, pred: ClassLabel) {
        self.counts[truth.index()][pred.index()] += 1;
    }

    pub fn count(&self, truth: ClassLabel, pred: ClassLabel) -> usize {
        self.counts[truth.index()][pred.index()]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        self.counts[0][0] + self.counts[1][1]
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.correct(), self.total())
    }

    /// Fraction of `class` predictions that were right; 0 when the class
    /// was never predicted.
    pub fn precision(&self, class: ClassLabel) -> f64 {
        let c = class.index();
        ratio(self.counts[c][c], self.counts[0][c] + self.counts[1][c])
    }

    /// Fraction of true `class` documents that were found; 0 when the
    /// class has no documents.
    pub fn recall(&self, class: ClassLabel) -> f64 {
        let c = class.index();
        ratio(self.counts[c][c], self.counts[c][0] + self.counts[c][1])
    }

    pub fn f1(&self, class: ClassLabel) -> f64 {
        let p = self.precision(class);
        let r = self.recall(class);
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn macro_precision(&self) -> f64 {
        ClassLabel::ALL.iter().map(|&c| self.precision(c)).sum::<f64>() / 2.0
    }

    pub fn macro_recall(&self) -> f64 {
        ClassLabel::ALL.iter().map(|&c| self.recall(c)).sum::<f64>() / 2.0
    }

    pub fn macro_f1(&self) -> f64 {
        ClassLabel::ALL.iter().map(|&c| self.f1(c)).sum::<f64>() / 2.0
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for t in 0..2 {
            for p in 0..2 {
                self.counts[t][p] += other.counts[t][p];
            }
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Anything that classifies documents and can state what it was trained
/// on (the evaluation harness refuses models whose training set touches
/// the test set).
pub trait Predictor {
    fn predict_label(&self, doc: &Document) -> Result<ClassLabel>;
    /// Sorted ids of the training documents; empty when not applicable.
    fn train_ids(&self) -> &[String];
}

impl Predictor for TrainedPipeline {
    fn predict_label(&self, doc: &Document) -> Result<ClassLabel> {
        self.predict(doc).map(|(label, _)| label)
    }

    fn train_ids(&self) -> &[String] {
        TrainedPipeline::train_ids(self)
    }
}

impl Predictor for EnsembleModel {
    fn predict_label(&self, doc: &Document) -> Result<ClassLabel> {
        self.predict(doc).map(|record| record.final_label)
    }

    fn train_ids(&self) -> &[String] {
        EnsembleModel::train_ids(self)
    }
}

/// One evaluated fold: the confusion matrix on its test documents plus
/// the sizes and a digest of the training ids (so reports prove which
/// documents each model saw).
#[derive(Debug, Clone, PartialEq)]
pub struct FoldReport {
    pub fold: u32,
    pub confusion: ConfusionMatrix,
    pub train_size: usize,
    pub test_size: usize,
    pub train_ids_sha256: String,
}

/// Aggregated evaluation: overall confusion matrix (micro-average over
/// all tested documents), the per-fold breakdown, and the key=value
/// fingerprint of every hyperparameter and seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub folds: Vec<FoldReport>,
    pub fingerprint: Vec<(String, String)>,
}

fn sha256_of_ids(ids: &[String]) -> String {
    let mut h = Sha256::new();
    for id in ids {
        h.update(id.as_bytes());
        h.update([b'\n']);
    }
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

/// Scores a trained model on one split's test documents. Refuses any
/// overlap between training and test ids, whether in the split itself or
/// between the model's recorded training set and the test documents.
pub fn evaluate<M: Predictor>(model: &M, corpus: &Corpus, split: &Split) -> Result<FoldReport> {
    for &i in &split.test {
        let id = &corpus.documents[i].id;
        if split.train.contains(&i) || model.train_ids().binary_search(id).is_ok() {
            return Err(Error::Leakage(id.clone()));
        }
    }

    let mut confusion = ConfusionMatrix::default();
    for &i in &split.test {
        let doc = &corpus.documents[i];
        let truth = doc.label.ok_or_else(|| Error::Document {
            doc: doc.id.clone(),
            reason: "unlabeled document in test set".into(),
        })?;
        confusion.record(truth, model.predict_label(doc)?);
    }

    let mut train_ids: Vec<String> = split
        .train
        .iter()
        .map(|&i| corpus.documents[i].id.clone())
        .collect();
    train_ids.sort();
    Ok(FoldReport {
        fold: split.fold,
        confusion,
        train_size: split.train.len(),
        test_size: split.test.len(),
        train_ids_sha256: sha256_of_ids(&train_ids),
    })
}

/// Runs k-fold cross-validation with a caller-supplied trainer: for each
/// split the trainer sees only the training documents, and the aggregate
/// accuracy is the micro-average over every document's single test
/// appearance.
pub fn cross_validate<M, F>(
    corpus: &Corpus,
    k: u32,
    seed: u64,
    mut fingerprint: Vec<(String, String)>,
    mut train_fn: F,
) -> Result<EvalReport>
where
    M: Predictor,
    F: FnMut(&[&Document]) -> Result<M>,
{
    let splits = crate::corpus::make_folds(corpus, k, seed)?;
    let mut confusion = ConfusionMatrix::default();
    let mut folds = Vec::with_capacity(splits.len());
    for split in &splits {
        let train: Vec<&Document> = split.train.iter().map(|&i| &corpus.documents[i]).collect();
        let model = train_fn(&train)?;
        let fold = evaluate(&model, corpus, split)?;
        confusion.merge(&fold.confusion);
        folds.push(fold);
    }
    fingerprint.push(("protocol.folds".into(), k.to_string()));
    fingerprint.push(("protocol.seed".into(), seed.to_string()));
    fingerprint.push(("protocol.documents".into(), corpus.documents.len().to_string()));
    fingerprint.sort();
    Ok(EvalReport {
        confusion,
        folds,
        fingerprint,
    })
}

/// Cross-validates a single pipeline spec.
pub fn cross_validate_pipeline(
    spec: &PipelineSpec,
    corpus: &Corpus,
    k: u32,
    seed: u64,
    settings: &TrainSettings,
) -> Result<EvalReport> {
    let mut fingerprint = spec.fingerprint_entries();
    fingerprint.extend(settings.fingerprint_entries());
    cross_validate(corpus, k, seed, fingerprint, |train| {
        train_pipeline(spec, train, settings)
    })
}

/// Cross-validates a voting ensemble.
pub fn cross_validate_ensemble(
    specs: &[PipelineSpec],
    corpus: &Corpus,
    k: u32,
    seed: u64,
    settings: &TrainSettings,
) -> Result<EvalReport> {
    let mut fingerprint: Vec<(String, String)> = specs
        .iter()
        .flat_map(PipelineSpec::fingerprint_entries)
        .collect();
    fingerprint.extend(settings.fingerprint_entries());
    cross_validate(corpus, k, seed, fingerprint, |train| {
        train_ensemble(specs, train, settings)
    })
}

/// Latent-space family swept over ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariant {
    Plain,
    Sprinkled,
}

impl SweepVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariant::Plain => "lsi",
            SweepVariant::Sprinkled => "sprinkled_lsi",
        }
    }
}

/// One sweep measurement: a requested rank for one variant, with
/// fold-averaged train and test accuracy. `effective_k` is the smallest
/// realized rank across folds (it can fall below `k` when a training
/// matrix runs out of spectrum).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub variant: SweepVariant,
    pub k: usize,
    pub effective_k: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

/// Plot-ready rank-sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub fingerprint: Vec<(String, String)>,
}

/// Iteration budget for the sweep's internal classifiers. The tolerance
/// still decides each solution; the budget is only generous enough that
/// one slow rank cannot abort the whole grid.
const SWEEP_SVM_MAX_ITER: usize = 100_000;

struct SweepCell {
    train_correct: usize,
    train_total: usize,
    test_correct: usize,
    test_total: usize,
    effective_k: usize,
}

/// Sweeps SVM-over-latent-space accuracy across a rank grid, for plain
/// and/or sprinkled variants, under k-fold cross-validation. Each fold
/// factors its training matrix once at the largest rank and slices that
/// factorization per grid point. Train accuracy is measured on the
/// training fold itself, which is what makes the overfitting gap visible.
pub fn dimension_sweep(
    corpus: &Corpus,
    ranks: &[usize],
    variants: &[SweepVariant],
    folds: u32,
    seed: u64,
    settings: &TrainSettings,
) -> Result<SweepResult> {
    if ranks.is_empty() {
        return Err(Error::param("ranks", "empty rank list"));
    }
    if ranks[0] < 1 {
        return Err(Error::param("ranks", "ranks start at 1"));
    }
    if ranks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("ranks", "ranks must be strictly increasing"));
    }
    if variants.is_empty() {
        return Err(Error::param("variants", "no variants selected"));
    }
    let k_max = *ranks.last().expect("non-empty");

    let splits = crate::corpus::make_folds(corpus, folds, seed)?;
    let mut cells: Vec<Vec<SweepCell>> = variants
        .iter()
        .map(|_| {
            ranks
                .iter()
                .map(|_| SweepCell {
                    train_correct: 0,
                    train_total: 0,
                    test_correct: 0,
                    test_total: 0,
                    effective_k: usize::MAX,
                })
                .collect()
        })
        .collect();

    for split in &splits {
        let train: Vec<&Document> = split.train.iter().map(|&i| &corpus.documents[i]).collect();
        let labels: Vec<ClassLabel> = train
            .iter()
            .map(|d| {
                d.label.ok_or_else(|| Error::Document {
                    doc: d.id.clone(),
                    reason: "unlabeled document in training set".into(),
                })
            })
            .collect::<Result<_>>()?;
        let signs: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
        let vocab = std::sync::Arc::new(build_vocabulary(&train, NgramOrder::Unigram, 1, true)?);
        let counts = count_matrix(&train, &vocab);
        let base = match settings.lsi_base {
            Weighting::Count => counts,
            Weighting::Tfidf => tfidf_matrix(&counts)?,
        };

        for (vi, &variant) in variants.iter().enumerate() {
            let sprinkle = match variant {
                SweepVariant::Plain => None,
                SweepVariant::Sprinkled => Some(DEFAULT_SPRINKLE),
            };
            let full = train_lsi(
                &base,
                &labels,
                &LsiOptions {
                    k: k_max,
                    sprinkle,
                    desprinkle: settings.desprinkle,
                    svd: settings.svd,
                },
            )?;
            for (ri, &rank) in ranks.iter().enumerate() {
                let model = full.truncate(rank)?;
                let x: Vec<SparseVec> = model
                    .training_coordinates(&base)?
                    .iter()
                    .map(|c| unit_sparse_of(c))
                    .collect();
                let svm = train_svm(
                    &x,
                    &signs,
                    &SvmOptions {
                        max_iter: SWEEP_SVM_MAX_ITER,
                        seed: settings.seed,
                        ..SvmOptions::default()
                    },
                )?;

                let cell = &mut cells[vi][ri];
                cell.effective_k = cell.effective_k.min(model.k_eff());
                cell.train_total += x.len();
                for (xi, &yi) in x.iter().zip(&signs) {
                    let (label, _) = predict_svm(&svm, xi)?;
                    if label.sign() == yi {
                        cell.train_correct += 1;
                    }
                }

                cell.test_total += split.test.len();
                for &i in &split.test {
                    let doc = &corpus.documents[i];
                    let truth = doc.label.ok_or_else(|| Error::Document {
                        doc: doc.id.clone(),
                        reason: "unlabeled document in test set".into(),
                    })?;
                    let q = match settings.lsi_base {
                        Weighting::Count => count_vector(doc, &vocab),
                        Weighting::Tfidf => tfidf_vector(doc, &vocab),
                    };
                    let coords = model.fold_in(&q)?;
                    let (label, _) = predict_svm(&svm, &unit_sparse_of(&coords))?;
                    if label == truth {
                        cell.test_correct += 1;
                    }
                }
            }
        }
    }

    let mut rows = Vec::new();
    for (vi, &variant) in variants.iter().enumerate() {
        for (ri, &rank) in ranks.iter().enumerate() {
            let cell = &cells[vi][ri];
            rows.push(SweepRow {
                variant,
                k: rank,
                effective_k: cell.effective_k,
                train_accuracy: ratio(cell.train_correct, cell.train_total),
                test_accuracy: ratio(cell.test_correct, cell.test_total),
            });
        }
    }
    let mut fingerprint = settings.fingerprint_entries();
    fingerprint.push(("protocol.folds".into(), folds.to_string()));
    fingerprint.push(("protocol.seed".into(), seed.to_string()));
    fingerprint.push(("protocol.documents".into(), corpus.documents.len().to_string()));
    fingerprint.push(("sweep.sprinkle".into(), DEFAULT_SPRINKLE.to_string()));
    fingerprint.push(("sweep.svm_max_iter".into(), SWEEP_SVM_MAX_ITER.to_string()));
    fingerprint.push((
        "sweep.ranks".into(),
        ranks.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
    ));
    fingerprint.sort();
    Ok(SweepResult { rows, fingerprint })
}

fn unit_sparse_of(coords: &nalgebra::DVector<f64>) -> SparseVec {
    let norm = coords.norm();
    if norm > 0.0 {
        let scaled: Vec<f64> = coords.iter().map(|v| v / norm).collect();
        SparseVec::from_dense(&scaled)
    } else {
        SparseVec::zeros(coords.len())
    }
}

fn write_comment_block(out: &mut String, generated_at: u64, fingerprint: &[(String, String)]) {
    let _ = writeln!(out, "# generated_at {generated_at}");
    let _ = writeln!(out, "# config:");
    for (key, value) in fingerprint {
        let _ = writeln!(out, "#   {key}={value}");
    }
}

/// Renders an evaluation report as tab-separated text: a `#` comment
/// block with the timestamp, config fingerprint and summary, then one
/// header row and one row per fold plus the overall micro-average.
/// Identical inputs produce identical bytes; the timestamp is confined to
/// the `# generated_at` line.
pub fn write_eval_report(report: &EvalReport, generated_at: u64) -> String {
    let mut out = String::new();
    write_comment_block(&mut out, generated_at, &report.fingerprint);
    let c = &report.confusion;
    let _ = writeln!(
        out,
        "# summary: documents={} accuracy={:.6} macro_precision={:.6} macro_recall={:.6} macro_f1={:.6}",
        c.total(),
        c.accuracy(),
        c.macro_precision(),
        c.macro_recall(),
        c.macro_f1(),
    );
    let _ = writeln!(
        out,
        "row\tfold\ttrain_size\ttest_size\ttrain_sha256\tdd\tdt\ttd\ttt\taccuracy\tprecision_deceptive\trecall_deceptive\tf1_deceptive\tprecision_truthful\trecall_truthful\tf1_truthful\tmacro_f1"
    );
    let mut write_row = |row: &str, fold: &str, train: &str, test: &str, sha: &str, m: &ConfusionMatrix| {
        use ClassLabel::{Deceptive as D, Truthful as T};
        let _ = writeln!(
            out,
            "{row}\t{fold}\t{train}\t{test}\t{sha}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            m.count(D, D),
            m.count(D, T),
            m.count(T, D),
            m.count(T, T),
            m.accuracy(),
            m.precision(D),
            m.recall(D),
            m.f1(D),
            m.precision(T),
            m.recall(T),
            m.f1(T),
            m.macro_f1(),
        );
    };
    for fold in &report.folds {
        write_row(
            "fold",
            &fold.fold.to_string(),
            &fold.train_size.to_string(),
            &fold.test_size.to_string(),
            &fold.train_ids_sha256,
            &fold.confusion,
        );
    }
    write_row("overall", "all", "-", "-", "-", &report.confusion);
    out
}

/// Renders a sweep result as tab-separated text with the same comment
/// conventions as [`write_eval_report`].
pub fn write_sweep_report(sweep: &SweepResult, generated_at: u64) -> String {
    let mut out = String::new();
    write_comment_block(&mut out, generated_at, &sweep.fingerprint);
    let _ = writeln!(out, "variant\tk\teffective_k\ttrain_accuracy\ttest_accuracy");
    for row in &sweep.rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{:.6}\t{:.6}",
            row.variant.as_str(),
            row.k,
            row.effective_k,
            row.train_accuracy,
            row.test_accuracy,
        );
    }
    out
}
