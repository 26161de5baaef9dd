//! Corpus ingestion: class-labeled review documents, token/stem
//! normalization, and stratified cross-validation folds.

pub mod porter;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::parse_tags;

/// Default seed used wherever a caller does not supply one.
pub const DEFAULT_SEED: u64 = 1;

/// The two review classes. Sign encoding is fixed project-wide:
/// deceptive = -1, truthful = +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Deceptive,
    Truthful,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 2] = [ClassLabel::Deceptive, ClassLabel::Truthful];

    /// The fixed {-1, +1} encoding.
    pub fn sign(self) -> f64 {
        match self {
            ClassLabel::Deceptive => -1.0,
            ClassLabel::Truthful => 1.0,
        }
    }

    /// Maps a score back to a label; zero and negatives map to deceptive
    /// (the shared tie rule).
    pub fn from_score(score: f64) -> Self {
        if score > 0.0 {
            ClassLabel::Truthful
        } else {
            ClassLabel::Deceptive
        }
    }

    /// Array position used by per-class tables: deceptive 0, truthful 1.
    pub fn index(self) -> usize {
        match self {
            ClassLabel::Deceptive => 0,
            ClassLabel::Truthful => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        ClassLabel::ALL[i]
    }

    /// The opposite class.
    pub fn other(self) -> Self {
        match self {
            ClassLabel::Deceptive => ClassLabel::Truthful,
            ClassLabel::Truthful => ClassLabel::Deceptive,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Deceptive => "deceptive",
            ClassLabel::Truthful => "truthful",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One review: raw text plus its normalized token and stem sequences,
/// optional POS tags (aligned with tokens), label, and fold assignment.
#[derive(Debug, Clone)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub tokens: Vec<String>,
    pub stems: Vec<String>,
    pub tags: Option<Vec<String>>,
    pub label: Option<ClassLabel>,
    pub fold: Option<u32>,
}

impl Document {
    /// Tokenizes and stems `text` into a new document.
    pub fn from_text(id: impl Into<String>, text: impl Into<String>, label: Option<ClassLabel>) -> Self {
        let text = text.into();
        let tokens = tokenize(&text);
        let stems = tokens.iter().map(|t| porter::stem(t)).collect();
        Document {
            id: id.into(),
            text,
            tokens,
            stems,
            tags: None,
            label,
            fold: None,
        }
    }

    /// Attaches POS tags, which must align one-to-one with the token list.
    pub fn with_tags(mut self, tags: Vec<String>) -> Result<Self> {
        if tags.len() != self.tokens.len() {
            return Err(Error::Document {
                doc: self.id.clone(),
                reason: format!(
                    "tag file has {} entries but the document tokenizes to {} tokens",
                    tags.len(),
                    self.tokens.len()
                ),
            });
        }
        self.tags = Some(tags);
        Ok(self)
    }
}

/// Lowercases and splits text on any non-alphanumeric character, dropping
/// tokens that consist entirely of digits.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_lowercase)
        .filter(|s| !s.chars().all(char::is_numeric))
        .collect()
}

/// Maps class subtree names to labels and configures fold assignment for
/// corpora that ship without fold directories.
#[derive(Debug, Clone)]
pub struct CorpusLayout {
    /// (subdirectory name, label) for each class.
    pub class_dirs: Vec<(String, ClassLabel)>,
    /// Fold count used when the corpus has no fold directories.
    pub folds: u32,
    /// Seed for the round-robin fold assignment.
    pub seed: u64,
}

impl Default for CorpusLayout {
    fn default() -> Self {
        CorpusLayout {
            class_dirs: vec![
                ("deceptive".into(), ClassLabel::Deceptive),
                ("truthful".into(), ClassLabel::Truthful),
            ],
            folds: 5,
            seed: DEFAULT_SEED,
        }
    }
}

/// An ingested corpus. Documents are sorted by id; every document carries
/// a label and a fold in [1, folds].
#[derive(Debug, Clone)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub folds: u32,
    pub class_counts: [usize; 2],
}

impl Corpus {
    /// Builds a corpus from in-memory documents, assigning stratified
    /// folds when documents lack them.
    pub fn from_documents(mut documents: Vec<Document>, folds: u32, seed: u64) -> Result<Self> {
        documents.sort_by(|a, b| a.id.cmp(&b.id));
        let all_assigned = documents
            .iter()
            .all(|d| d.fold.is_some_and(|f| f >= 1 && f <= folds));
        if !all_assigned {
            assign_folds(&mut documents, folds, seed)?;
        }
        let mut class_counts = [0usize; 2];
        for d in &documents {
            if let Some(label) = d.label {
                class_counts[label.index()] += 1;
            }
        }
        Ok(Corpus {
            documents,
            folds,
            class_counts,
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }
}

/// Per-class/per-fold counts plus skipped files, printable as the
/// line-oriented ingestion report.
#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub per_class: Vec<(ClassLabel, usize)>,
    pub per_fold: BTreeMap<u32, usize>,
    pub tagged: usize,
    pub skipped: Vec<(PathBuf, String)>,
}

impl fmt::Display for IngestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let total: usize = self.per_class.iter().map(|&(_, n)| n).sum();
        writeln!(f, "documents: {total}")?;
        for (label, n) in &self.per_class {
            writeln!(f, "  class {label}: {n}")?;
        }
        for (fold, n) in &self.per_fold {
            writeln!(f, "  fold {fold}: {n}")?;
        }
        writeln!(f, "  with POS tags: {}", self.tagged)?;
        writeln!(f, "skipped: {}", self.skipped.len())?;
        for (path, reason) in &self.skipped {
            writeln!(f, "  {}: {reason}", path.display())?;
        }
        Ok(())
    }
}

/// Loads `<root>/<class>/[fold<i>/]<doc>.txt` into a corpus. Fold
/// directories, when present, are honored verbatim; otherwise folds are
/// assigned by seeded stratified round-robin. Unreadable files are skipped
/// and counted in the report; `.tags` sidecars are attached to their
/// documents.
pub fn load_corpus(root: &Path, layout: &CorpusLayout) -> Result<(Corpus, IngestReport)> {
    if !root.is_dir() {
        return Err(Error::CorpusRoot(root.to_path_buf()));
    }
    let mut report = IngestReport::default();
    let mut documents = Vec::new();
    let mut any_folds = false;

    for (dir_name, label) in &layout.class_dirs {
        let class_dir = root.join(dir_name);
        if !class_dir.is_dir() {
            return Err(Error::NoDocuments(class_dir));
        }
        let mut fold_dirs: Vec<(u32, PathBuf)> = Vec::new();
        let mut loose_files: Vec<PathBuf> = Vec::new();
        for entry in read_dir_sorted(&class_dir)? {
            let name = entry.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if entry.is_dir() {
                match name.strip_prefix("fold").and_then(|s| s.parse::<u32>().ok()) {
                    Some(i) if i >= 1 => fold_dirs.push((i, entry.clone())),
                    _ => report
                        .skipped
                        .push((entry.clone(), "unexpected directory".into())),
                }
            } else if name.ends_with(".txt") {
                loose_files.push(entry.clone());
            } else if !name.ends_with(".tags") {
                report
                    .skipped
                    .push((entry.clone(), "unrecognized extension".into()));
            }
        }
        if !fold_dirs.is_empty() && !loose_files.is_empty() {
            return Err(Error::MixedLayout(class_dir));
        }

        let before = documents.len();
        if fold_dirs.is_empty() {
            for file in loose_files {
                load_document(&file, dir_name, None, *label, &mut documents, &mut report)?;
            }
        } else {
            any_folds = true;
            for (fold, dir) in fold_dirs {
                for file in read_dir_sorted(&dir)? {
                    let name = file.file_name().and_then(|n| n.to_str()).unwrap_or("");
                    if file.is_dir() || !name.ends_with(".txt") {
                        if !name.ends_with(".tags") {
                            report.skipped.push((file.clone(), "not a document".into()));
                        }
                        continue;
                    }
                    load_document(&file, dir_name, Some(fold), *label, &mut documents, &mut report)?;
                }
            }
        }
        let count = documents.len() - before;
        if count == 0 {
            return Err(Error::NoDocuments(class_dir));
        }
        report.per_class.push((*label, count));
    }

    let folds = if any_folds {
        let observed: std::collections::BTreeSet<u32> =
            documents.iter().filter_map(|d| d.fold).collect();
        let k = observed.len() as u32;
        if documents.iter().any(|d| d.fold.is_none())
            || *observed.iter().max().unwrap_or(&0) != k
            || *observed.iter().min().unwrap_or(&0) != 1
        {
            return Err(Error::param(
                "folds",
                "fold directories must cover every document and be numbered fold1..foldK",
            ));
        }
        k
    } else {
        layout.folds
    };

    let corpus = Corpus::from_documents(documents, folds, layout.seed)?;
    for d in &corpus.documents {
        *report.per_fold.entry(d.fold.unwrap_or(0)).or_insert(0) += 1;
    }
    report.tagged = corpus.documents.iter().filter(|d| d.tags.is_some()).count();
    Ok((corpus, report))
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| !n.starts_with('.'))
                .unwrap_or(false)
        })
        .collect();
    entries.sort();
    Ok(entries)
}

fn load_document(
    file: &Path,
    class_dir: &str,
    fold: Option<u32>,
    label: ClassLabel,
    documents: &mut Vec<Document>,
    report: &mut IngestReport,
) -> Result<()> {
    let text = match std::fs::read(file) {
        Ok(bytes) => match String::from_utf8(bytes) {
            Ok(s) => s,
            Err(_) => {
                report.skipped.push((file.to_path_buf(), "not valid UTF-8".into()));
                return Ok(());
            }
        },
        Err(e) => {
            report.skipped.push((file.to_path_buf(), e.to_string()));
            return Ok(());
        }
    };
    let stem_name = file
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("unnamed");
    let id = match fold {
        Some(i) => format!("{class_dir}/fold{i}/{stem_name}"),
        None => format!("{class_dir}/{stem_name}"),
    };
    let mut doc = Document::from_text(id, text, Some(label));
    doc.fold = fold;

    let sidecar = file.with_extension("tags");
    if sidecar.is_file() {
        let content = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let pairs = parse_tags(&content).map_err(|e| Error::Document {
            doc: doc.id.clone(),
            reason: e.to_string(),
        })?;
        let tags = pairs.into_iter().map(|(_, tag)| tag).collect();
        doc = doc.with_tags(tags)?;
    }
    documents.push(doc);
    Ok(())
}

/// Stratified round-robin fold assignment: per class, document ids are
/// shuffled with a seeded generator, then dealt into folds 1..=k.
fn assign_folds(documents: &mut [Document], k: u32, seed: u64) -> Result<()> {
    if k < 2 {
        return Err(Error::param("folds", format!("need at least 2 folds, got {k}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for label in ClassLabel::ALL {
        let mut members: Vec<usize> = documents
            .iter()
            .enumerate()
            .filter(|(_, d)| d.label == Some(label))
            .map(|(i, _)| i)
            .collect();
        members.sort_by(|&a, &b| documents[a].id.cmp(&documents[b].id));
        members.shuffle(&mut rng);
        for (pos, &doc_index) in members.iter().enumerate() {
            documents[doc_index].fold = Some((pos as u32 % k) + 1);
        }
    }
    Ok(())
}

/// One cross-validation split: indices into `corpus.documents`.
#[derive(Debug, Clone)]
pub struct Split {
    pub fold: u32,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Produces k train/test splits. When `k` matches the corpus's own fold
/// count, the stored assignment is honored verbatim; otherwise a fresh
/// seeded stratified assignment is drawn. Only labeled documents
/// participate.
pub fn make_folds(corpus: &Corpus, k: u32, seed: u64) -> Result<Vec<Split>> {
    if k < 2 {
        return Err(Error::param("k", format!("need at least 2 folds, got {k}")));
    }
    for label in ClassLabel::ALL {
        let n = corpus.class_counts[label.index()];
        if n < k as usize {
            return Err(Error::param(
                "k",
                format!("class {label} has {n} documents, fewer than k={k}"),
            ));
        }
    }

    let assignment: Vec<Option<u32>> = if k == corpus.folds
        && corpus
            .documents
            .iter()
            .all(|d| d.label.is_none() || d.fold.is_some_and(|f| f >= 1 && f <= k))
    {
        corpus.documents.iter().map(|d| d.fold).collect()
    } else {
        let mut scratch: Vec<Document> = corpus.documents.clone();
        for d in &mut scratch {
            d.fold = None;
        }
        assign_folds(&mut scratch, k, seed)?;
        scratch.into_iter().map(|d| d.fold).collect()
    };

    let mut splits = Vec::with_capacity(k as usize);
    for fold in 1..=k {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, doc) in corpus.documents.iter().enumerate() {
            if doc.label.is_none() {
                continue;
            }
            if assignment[i] == Some(fold) {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        splits.push(Split { fold, train, test });
    }
    Ok(splits)
}
