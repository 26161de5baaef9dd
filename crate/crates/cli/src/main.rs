//! Batch front end for the detection pipeline: ingest a review corpus,
//! train and persist the voting ensemble, run cross-validated
//! evaluations and rank sweeps, inspect latent concepts, and classify
//! new documents.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use opspam_core::corpus::{load_corpus, ClassLabel, Corpus, Document};
use opspam_core::ensemble::{train_ensemble, EnsembleModel, PipelineSpec};
use opspam_core::eval::{
    cross_validate_ensemble, cross_validate_pipeline, dimension_sweep, write_eval_report,
    write_sweep_report, EvalReport, SweepVariant,
};
use opspam_core::features::{build_vocabulary, count_matrix, parse_tags, NgramOrder, Weighting};
use opspam_core::lsi::{train_lsi, LsiOptions, Polarity, DEFAULT_SPRINKLE};
use opspam_core::persist::{load_ensemble, save_ensemble};
use opspam_core::{Error, Result};

use config::{help_table, resolve, Overrides, RunConfig};

const DEFAULT_SWEEP_RANKS: &str = "50,100,150,200,250,300,350,400,450,500,550,600";

#[derive(Parser)]
#[command(
    name = "opspam",
    about = "Deceptive-review detection: n-gram, POS and latent-space channels under a voting ensemble",
    version,
    after_help = HELP_FOOTER.as_str(),
)]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Corpus root directory (default: $OPSPAM_CORPUS).
    #[arg(long, global = true, value_name = "DIR")]
    root: Option<PathBuf>,

    /// Directory for reports and model artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    output: Option<PathBuf>,

    /// Fold count for assignment and cross-validation.
    #[arg(long, global = true)]
    folds: Option<u32>,

    /// Protocol seed (fold assignment and shuffling).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load the corpus and print an ingestion report.
    Ingest,
    /// Train the ensemble on the full corpus and persist it.
    Train {
        /// Artifact path (default: <output>/model.bin).
        #[arg(long, value_name = "FILE")]
        model_out: Option<PathBuf>,
    },
    /// Cross-validate the ensemble (or one member) and write a report.
    Evaluate {
        /// Evaluate a single member by id instead of the ensemble.
        #[arg(long, value_name = "ID")]
        member: Option<String>,
    },
    /// Sweep latent ranks and write train/test accuracy per rank.
    Sweep {
        /// Comma-separated strictly increasing ranks.
        #[arg(long, value_name = "LIST", default_value = DEFAULT_SWEEP_RANKS)]
        ranks: String,
        /// Which latent families to sweep: plain, sprinkled, or both.
        #[arg(long, default_value = "both")]
        variant: String,
    },
    /// Print the strongest terms on both poles of a latent concept.
    Concepts {
        /// Truncation rank of the factorization.
        #[arg(long, default_value_t = 300)]
        k: usize,
        /// Concept index to inspect (0-based).
        #[arg(long, default_value_t = 0)]
        concept: usize,
        /// Terms to list per pole.
        #[arg(long, default_value_t = 25)]
        top: usize,
        /// Factor the unlabeled matrix instead of the sprinkled one.
        #[arg(long)]
        plain: bool,
    },
    /// Classify a document file or a directory of .txt files.
    Predict {
        /// Model artifact (default: <output>/model.bin).
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
        /// Document file or directory.
        input: PathBuf,
    },
}

static HELP_FOOTER: std::sync::LazyLock<String> = std::sync::LazyLock::new(|| {
    format!(
        "{}\nExit codes: 0 success, 1 usage error, 2 data error, 3 numerical non-convergence.",
        help_table()
    )
});

fn main() -> ExitCode {
    // Die quietly when a downstream pager or `head` closes the pipe.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code(&err))
        }
    }
}

/// 1 usage error, 2 data error, 3 numerical non-convergence.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::NotConverged { .. } => 3,
        Error::Member { source, .. } => exit_code(source),
        Error::Param { .. }
        | Error::Config(_)
        | Error::Dimension { .. }
        | Error::Weighting { .. } => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<()> {
    let overrides = Overrides {
        root: cli.root.clone(),
        output: cli.output.clone(),
        folds: cli.folds,
        seed: cli.seed,
    };
    let cfg = resolve(cli.config.as_ref(), &overrides)?;
    match cli.command {
        Command::Ingest => cmd_ingest(&cfg),
        Command::Train { model_out } => cmd_train(&cfg, model_out),
        Command::Evaluate { member } => cmd_evaluate(&cfg, member),
        Command::Sweep { ranks, variant } => cmd_sweep(&cfg, &ranks, &variant),
        Command::Concepts {
            k,
            concept,
            top,
            plain,
        } => cmd_concepts(&cfg, k, concept, top, plain),
        Command::Predict { model, input } => cmd_predict(&cfg, model, &input),
    }
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn load(cfg: &RunConfig) -> Result<Corpus> {
    let root = cfg.require_root()?;
    let (corpus, report) = load_corpus(root, &cfg.layout)?;
    for (path, reason) in &report.skipped {
        eprintln!("warning: skipped {}: {reason}", path.display());
    }
    Ok(corpus)
}

fn write_output(cfg: &RunConfig, name: &str, content: &str) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| Error::Io {
            path: cfg.output_dir.clone(),
            source: e,
        })?;
    let path = cfg.output_dir.join(name);
    fs::write(&path, content).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    Ok(path)
}

fn cmd_ingest(cfg: &RunConfig) -> Result<()> {
    let root = cfg.require_root()?;
    let (_, report) = load_corpus(root, &cfg.layout)?;
    print!("{report}");
    Ok(())
}

fn cmd_train(cfg: &RunConfig, model_out: Option<PathBuf>) -> Result<()> {
    let corpus = load(cfg)?;
    let refs: Vec<&Document> = corpus.documents.iter().collect();
    eprintln!(
        "training {} members on {} documents",
        cfg.members.len(),
        refs.len()
    );
    let model = train_ensemble(&cfg.members, &refs, &cfg.settings)?;
    let bytes = save_ensemble(&model);
    let path = match model_out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Error::Io {
                    path: dir.to_path_buf(),
                    source: e,
                })?;
            }
            fs::write(&path, &bytes).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            path
        }
        None => {
            fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::Io {
                path: cfg.output_dir.clone(),
                source: e,
            })?;
            let path = cfg.output_dir.join("model.bin");
            fs::write(&path, &bytes).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            path
        }
    };
    println!(
        "trained {} members on {} documents -> {}",
        model.members().len(),
        model.train_ids().len(),
        path.display()
    );
    Ok(())
}

fn eval_summary(report: &EvalReport) -> String {
    format!(
        "documents={} accuracy={:.4} macro_f1={:.4}",
        report.confusion.total(),
        report.confusion.accuracy(),
        report.confusion.macro_f1()
    )
}

fn cmd_evaluate(cfg: &RunConfig, member: Option<String>) -> Result<()> {
    let corpus = load(cfg)?;
    let folds = cfg.layout.folds;
    let seed = cfg.layout.seed;
    let (name, report) = match member {
        Some(id) => {
            let spec: &PipelineSpec = cfg
                .members
                .iter()
                .find(|m| m.id == id)
                .ok_or_else(|| Error::Config(format!("no member named `{id}` in the ensemble spec")))?;
            eprintln!("cross-validating member {id} ({} folds)", folds);
            let report = cross_validate_pipeline(spec, &corpus, folds, seed, &cfg.settings)?;
            (format!("eval_{id}.tsv"), report)
        }
        None => {
            eprintln!(
                "cross-validating {}-member ensemble ({} folds)",
                cfg.members.len(),
                folds
            );
            let report = cross_validate_ensemble(&cfg.members, &corpus, folds, seed, &cfg.settings)?;
            ("eval_ensemble.tsv".to_string(), report)
        }
    };
    let path = write_output(cfg, &name, &write_eval_report(&report, now_unix()))?;
    println!("{} -> {}", eval_summary(&report), path.display());
    Ok(())
}

fn parse_ranks(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad rank `{s}` in --ranks")))
        })
        .collect()
}

fn parse_variants(text: &str) -> Result<Vec<SweepVariant>> {
    match text {
        "plain" => Ok(vec![SweepVariant::Plain]),
        "sprinkled" => Ok(vec![SweepVariant::Sprinkled]),
        "both" => Ok(vec![SweepVariant::Plain, SweepVariant::Sprinkled]),
        other => Err(Error::Config(format!(
            "--variant must be plain, sprinkled, or both, got `{other}`"
        ))),
    }
}

fn cmd_sweep(cfg: &RunConfig, ranks: &str, variant: &str) -> Result<()> {
    let corpus = load(cfg)?;
    let ranks = parse_ranks(ranks)?;
    let variants = parse_variants(variant)?;
    eprintln!(
        "sweeping {} ranks x {} variants ({} folds)",
        ranks.len(),
        variants.len(),
        cfg.layout.folds
    );
    let result = dimension_sweep(
        &corpus,
        &ranks,
        &variants,
        cfg.layout.folds,
        cfg.layout.seed,
        &cfg.settings,
    )?;
    let text = write_sweep_report(&result, now_unix());
    let path = write_output(cfg, "sweep.tsv", &text)?;
    for row in &result.rows {
        println!(
            "{}\tk={}\ttrain={:.4}\ttest={:.4}",
            row.variant.as_str(),
            row.k,
            row.train_accuracy,
            row.test_accuracy
        );
    }
    println!("-> {}", path.display());
    Ok(())
}

fn cmd_concepts(cfg: &RunConfig, k: usize, concept: usize, top: usize, plain: bool) -> Result<()> {
    let corpus = load(cfg)?;
    let refs: Vec<&Document> = corpus.documents.iter().collect();
    let labels: Vec<ClassLabel> = refs
        .iter()
        .map(|d| {
            d.label.ok_or_else(|| Error::Document {
                doc: d.id.clone(),
                reason: "unlabeled document".into(),
            })
        })
        .collect::<Result<_>>()?;
    let vocab = std::sync::Arc::new(build_vocabulary(&refs, NgramOrder::Unigram, 1, true)?);
    let counts = count_matrix(&refs, &vocab);
    let base = match cfg.settings.lsi_base {
        Weighting::Count => counts,
        Weighting::Tfidf => opspam_core::features::tfidf_matrix(&counts)?,
    };
    eprintln!(
        "factoring {}x{} matrix at rank {k}",
        base.matrix.rows(),
        base.matrix.cols()
    );
    let model = train_lsi(
        &base,
        &labels,
        &LsiOptions {
            k,
            sprinkle: if plain { None } else { Some(DEFAULT_SPRINKLE) },
            desprinkle: cfg.settings.desprinkle,
            svd: cfg.settings.svd,
        },
    )?;
    let positive = model.top_terms(&vocab, concept, Polarity::Positive, top)?;
    let negative = model.top_terms(&vocab, concept, Polarity::Negative, top)?;
    println!(
        "# concept {concept} of {} (sigma {:.6})",
        model.k_eff(),
        model.s()[concept]
    );
    println!("rank\tpositive_term\tloading\tnegative_term\tloading");
    for i in 0..positive.len().max(negative.len()) {
        let (pt, pv) = positive
            .get(i)
            .map(|(t, v)| (t.as_str(), format!("{v:.6}")))
            .unwrap_or(("-", "-".into()));
        let (nt, nv) = negative
            .get(i)
            .map(|(t, v)| (t.as_str(), format!("{v:.6}")))
            .unwrap_or(("-", "-".into()));
        println!("{}\t{pt}\t{pv}\t{nt}\t{nv}", i + 1);
    }
    Ok(())
}

fn read_document(path: &Path) -> Result<Document> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let doc = Document::from_text(id, text, None);
    let sidecar = path.with_extension("tags");
    if sidecar.is_file() {
        let content = fs::read_to_string(&sidecar).map_err(|e| Error::Io {
            path: sidecar.clone(),
            source: e,
        })?;
        let tags = parse_tags(&content)?
            .into_iter()
            .map(|(_, tag)| tag)
            .collect();
        return doc.with_tags(tags);
    }
    Ok(doc)
}

fn predict_inputs(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(input)
            .map_err(|e| Error::Io {
                path: input.to_path_buf(),
                source: e,
            })?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|ext| ext == "txt"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::NoDocuments(input.to_path_buf()));
        }
        Ok(files)
    } else if input.is_file() {
        Ok(vec![input.to_path_buf()])
    } else {
        Err(Error::Io {
            path: input.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory"),
        })
    }
}

fn vote_letter(label: ClassLabel) -> char {
    match label {
        ClassLabel::Deceptive => 'd',
        ClassLabel::Truthful => 't',
    }
}

fn cmd_predict(cfg: &RunConfig, model: Option<PathBuf>, input: &Path) -> Result<()> {
    let model_path = model.unwrap_or_else(|| cfg.output_dir.join("model.bin"));
    let bytes = fs::read(&model_path).map_err(|e| Error::Io {
        path: model_path.clone(),
        source: e,
    })?;
    let ensemble: EnsembleModel = load_ensemble(&bytes)?;
    for path in predict_inputs(input)? {
        let doc = read_document(&path)?;
        let record = ensemble.predict(&doc)?;
        let winner = record.tally[record.final_label.index()];
        let loser = record.tally[record.final_label.other().index()];
        let votes: Vec<String> = record
            .member_votes
            .iter()
            .map(|(id, vote)| format!("{id}={}", vote_letter(*vote)))
            .collect();
        println!(
            "{}\t{}\t{winner}:{loser}\t{}",
            doc.id,
            record.final_label,
            votes.join(",")
        );
    }
    Ok(())
}
