//! Run configuration: a TOML file, command-line overrides, and one
//! environment variable, resolved into the exact set of values the
//! library consumes.

use std::env;
use std::fs;
use std::path::PathBuf;

use serde::Deserialize;

use opspam_core::corpus::CorpusLayout;
use opspam_core::ensemble::{default_members, parse_ensemble_config, PipelineSpec, TrainSettings};
use opspam_core::features::Weighting;
use opspam_core::{Error, Result};

/// Environment variable giving the default corpus root.
pub const CORPUS_ENV: &str = "OPSPAM_CORPUS";

/// Every config key with its default, rendered into `--help` so the
/// documented table and the resolver cannot drift apart silently.
pub const CONFIG_KEYS: &[(&str, &str, &str)] = &[
    ("corpus.root", "(unset)", "corpus root directory; overridden by --root, falls back to $OPSPAM_CORPUS"),
    ("corpus.deceptive_dir", "deceptive", "subdirectory holding the deceptive class"),
    ("corpus.truthful_dir", "truthful", "subdirectory holding the truthful class"),
    ("corpus.folds", "5", "fold count for assignment and cross-validation; overridden by --folds"),
    ("corpus.seed", "1", "seed for fold assignment and shuffling; overridden by --seed"),
    ("ensemble.spec", "(built-in five members)", "TOML file listing the member pipelines"),
    ("svd.oversample", "10", "extra subspace dimensions during factorization"),
    ("svd.tol", "1e-7", "relative singular-value convergence tolerance"),
    ("svd.max_iter", "200", "subspace iteration limit"),
    ("svd.seed", "1", "seed for the factorization's random start"),
    ("lsi.base", "count", "matrix weighting fed to the factorization: count or tfidf"),
    ("lsi.desprinkle", "false", "drop pseudo-term rows (renormalizing) at projection time"),
    ("pos.fallback_tagger", "false", "tag untagged documents with the built-in heuristic tagger (synthetic-data aid; real runs should supply .tags sidecars)"),
    ("train.seed", "1", "seed for classifier-level randomness"),
    ("output.dir", "out", "directory for reports and model artifacts"),
];

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FileConfig {
    corpus: CorpusSection,
    ensemble: EnsembleSection,
    svd: SvdSection,
    lsi: LsiSection,
    pos: PosSection,
    train: TrainSection,
    output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CorpusSection {
    root: Option<PathBuf>,
    deceptive_dir: Option<String>,
    truthful_dir: Option<String>,
    folds: Option<u32>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct EnsembleSection {
    spec: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SvdSection {
    oversample: Option<usize>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct LsiSection {
    base: Option<String>,
    desprinkle: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct PosSection {
    fallback_tagger: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct TrainSection {
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct OutputSection {
    dir: Option<PathBuf>,
}

/// Command-line values that override the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub root: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub folds: Option<u32>,
    pub seed: Option<u64>,
}

/// Fully resolved configuration; every downstream hyperparameter lives
/// here or in the member specs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub root: Option<PathBuf>,
    pub layout: CorpusLayout,
    pub members: Vec<PipelineSpec>,
    pub settings: TrainSettings,
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// The corpus root, or a usage error telling the user the three ways
    /// to set one.
    pub fn require_root(&self) -> Result<&PathBuf> {
        self.root.as_ref().ok_or_else(|| {
            Error::Config(format!(
                "corpus root not set; use --root, corpus.root in the config file, or ${CORPUS_ENV}"
            ))
        })
    }
}

fn parse_weighting(s: &str) -> Result<Weighting> {
    match s {
        "count" => Ok(Weighting::Count),
        "tfidf" => Ok(Weighting::Tfidf),
        other => Err(Error::Config(format!(
            "lsi.base must be `count` or `tfidf`, got `{other}`"
        ))),
    }
}

/// Loads the optional config file, applies command-line overrides and the
/// environment fallback, and fills in the documented defaults.
pub fn resolve(config_path: Option<&PathBuf>, overrides: &Overrides) -> Result<RunConfig> {
    let file = match config_path {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            toml::from_str::<FileConfig>(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };

    let defaults = CorpusLayout::default();
    let root = overrides
        .root
        .clone()
        .or(file.corpus.root)
        .or_else(|| env::var_os(CORPUS_ENV).map(PathBuf::from));
    let layout = CorpusLayout {
        class_dirs: vec![
            (
                file.corpus
                    .deceptive_dir
                    .unwrap_or_else(|| defaults.class_dirs[0].0.clone()),
                defaults.class_dirs[0].1,
            ),
            (
                file.corpus
                    .truthful_dir
                    .unwrap_or_else(|| defaults.class_dirs[1].0.clone()),
                defaults.class_dirs[1].1,
            ),
        ],
        folds: overrides.folds.or(file.corpus.folds).unwrap_or(defaults.folds),
        seed: overrides.seed.or(file.corpus.seed).unwrap_or(defaults.seed),
    };

    let members = match file.ensemble.spec {
        Some(path) => {
            let text = fs::read_to_string(&path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            parse_ensemble_config(&text)?
        }
        None => default_members(),
    };

    let mut settings = TrainSettings::default();
    if let Some(v) = file.svd.oversample {
        settings.svd.oversample = v;
    }
    if let Some(v) = file.svd.tol {
        settings.svd.tol = v;
    }
    if let Some(v) = file.svd.max_iter {
        settings.svd.max_iter = v;
    }
    if let Some(v) = file.svd.seed {
        settings.svd.seed = v;
    }
    if let Some(ref v) = file.lsi.base {
        settings.lsi_base = parse_weighting(v)?;
    }
    if let Some(v) = file.lsi.desprinkle {
        settings.desprinkle = v;
    }
    if let Some(v) = file.pos.fallback_tagger {
        settings.fallback_tagger = v;
    }
    if let Some(v) = file.train.seed {
        settings.seed = v;
    }

    Ok(RunConfig {
        root,
        layout,
        members,
        settings,
        output_dir: overrides
            .output
            .clone()
            .or(file.output.dir)
            .unwrap_or_else(|| PathBuf::from("out")),
    })
}

/// The `--help` table of config keys.
pub fn help_table() -> String {
    let mut out = String::from("Config file keys (TOML; flags override the file):\n");
    let width = CONFIG_KEYS.iter().map(|(k, _, _)| k.len()).max().unwrap_or(0);
    let dwidth = CONFIG_KEYS.iter().map(|(_, d, _)| d.len()).max().unwrap_or(0);
    for (key, default, doc) in CONFIG_KEYS {
        out.push_str(&format!(
            "  {key:<width$}  default: {default:<dwidth$}  {doc}\n"
        ));
    }
    out
}
