use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_opspam"))
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const DECEPTIVE_POOL: &[&str] = &[
    "my", "husband", "chicago", "visit", "experience", "luxury", "amazing", "wonderful", "will",
    "definitely", "stay", "again", "city", "trip", "vacation",
];
const TRUTHFUL_POOL: &[&str] = &[
    "room", "bathroom", "location", "night", "walk", "park", "floor", "elevator", "door",
    "window", "street", "block", "desk", "price", "breakfast",
];
const SHARED_POOL: &[&str] = &[
    "hotel", "the", "was", "a", "staff", "service", "bed", "clean", "great", "good", "we", "i",
    "it", "very", "nice",
];

fn synth_text(doc: usize, pool: &[&str]) -> String {
    let len = 30 + (doc * 7) % 15;
    let mut words = Vec::with_capacity(len);
    for j in 0..len {
        let z = doc * 31 + j * 17;
        if z % 5 < 3 {
            words.push(pool[z % pool.len()]);
        } else {
            words.push(SHARED_POOL[z % SHARED_POOL.len()]);
        }
    }
    words.join(" ")
}

/// `<root>/deceptive/dNNN.txt` + `<root>/truthful/tNNN.txt`, n per class.
fn write_corpus(root: &Path, n: usize) {
    for (dir, prefix, pool) in [
        ("deceptive", "d", DECEPTIVE_POOL),
        ("truthful", "t", TRUTHFUL_POOL),
    ] {
        let class_dir = root.join(dir);
        fs::create_dir_all(&class_dir).unwrap();
        for i in 0..n {
            fs::write(
                class_dir.join(format!("{prefix}{i:03}.txt")),
                synth_text(i, pool),
            )
            .unwrap();
        }
    }
}

struct Setup {
    _tmp: TempDir,
    root: PathBuf,
    out: PathBuf,
    config: PathBuf,
}

/// A corpus plus a config pointing at it, with a three-member spec whose
/// latent rank fits small matrices.
fn setup(n_per_class: usize) -> Setup {
    let tmp = TempDir::new().unwrap();
    let root = tmp.path().join("corpus");
    write_corpus(&root, n_per_class);
    let out = tmp.path().join("out");
    let members = tmp.path().join("members.toml");
    fs::write(
        &members,
        r#"
[[member]]
id = "unigram_svm"
min_df = 1

[member.channel]
type = "unigram_count"

[member.classifier]
type = "svm"
max_iter = 100000

[[member]]
id = "unigram_nb"
min_df = 1

[member.channel]
type = "unigram_count"

[member.classifier]
type = "nb"

[[member]]
id = "sprinkle_svm"
min_df = 1

[member.channel]
type = "sprinkled_lsi"
k = 4
s = 2

[member.classifier]
type = "svm"
max_iter = 100000
"#,
    )
    .unwrap();
    let config = tmp.path().join("run.toml");
    fs::write(
        &config,
        format!(
            "[corpus]\nroot = {root:?}\n\n[ensemble]\nspec = {members:?}\n\n[output]\ndir = {out:?}\n",
            root = root.to_str().unwrap(),
            members = members.to_str().unwrap(),
            out = out.to_str().unwrap(),
        ),
    )
    .unwrap();
    Setup {
        _tmp: tmp,
        root,
        out,
        config,
    }
}

#[test]
fn help_lists_every_config_key_with_default() {
    let out = bin().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    for (key, default) in [
        ("corpus.root", "(unset)"),
        ("corpus.deceptive_dir", "deceptive"),
        ("corpus.truthful_dir", "truthful"),
        ("corpus.folds", "5"),
        ("corpus.seed", "1"),
        ("ensemble.spec", "(built-in five members)"),
        ("svd.oversample", "10"),
        ("svd.tol", "1e-7"),
        ("svd.max_iter", "200"),
        ("svd.seed", "1"),
        ("lsi.base", "count"),
        ("lsi.desprinkle", "false"),
        ("pos.fallback_tagger", "false"),
        ("train.seed", "1"),
        ("output.dir", "out"),
    ] {
        assert!(text.contains(key), "--help lacks key {key}");
        assert!(
            text.contains(&format!("{key}")) && text.contains(default),
            "--help lacks default {default} for {key}"
        );
        let line = text
            .lines()
            .find(|l| l.trim_start().starts_with(key))
            .unwrap_or_else(|| panic!("no help line for {key}"));
        assert!(line.contains(default), "help line for {key} lacks its default: {line}");
    }
    assert!(text.contains("Exit codes: 0 success, 1 usage error"));
}

#[test]
fn ingest_reports_counts() {
    let s = setup(10);
    let out = bin()
        .args(["ingest", "--root"])
        .arg(&s.root)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("documents: 20"));
    assert!(text.contains("class deceptive: 10"));
    assert!(text.contains("class truthful: 10"));
    assert!(text.contains("skipped: 0"));
}

#[test]
fn ingest_missing_root_fails_naming_the_path() {
    let out = bin()
        .args(["ingest", "--root", "/no/such/corpus"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/no/such/corpus"));
}

#[test]
fn ingest_skips_unreadable_files() {
    let s = setup(10);
    fs::write(s.root.join("deceptive/broken.txt"), [0xff, 0xfe, 0x00, 0xc3]).unwrap();
    let out = bin()
        .args(["ingest", "--root"])
        .arg(&s.root)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("documents: 20"));
    assert!(text.contains("skipped: 1"));
    assert!(text.contains("broken.txt"));
}

#[test]
fn missing_root_configuration_is_a_usage_error() {
    let out = bin()
        .arg("ingest")
        .env_remove("OPSPAM_CORPUS")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("OPSPAM_CORPUS"));
}

#[test]
fn corpus_root_comes_from_the_environment() {
    let s = setup(10);
    let out = bin()
        .arg("ingest")
        .env("OPSPAM_CORPUS", &s.root)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("documents: 20"));
}

#[test]
fn train_then_predict_round_trip() {
    let s = setup(10);
    let out = bin()
        .args(["--config"])
        .arg(&s.config)
        .arg("train")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(s.out.join("model.bin").is_file());

    // Single file: one tab-separated line with id, label, tally, votes.
    let out = bin()
        .args(["--config"])
        .arg(&s.config)
        .arg("predict")
        .arg(s.root.join("truthful/t003.txt"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let line = stdout(&out);
    let fields: Vec<&str> = line.trim_end().split('\t').collect();
    assert_eq!(fields.len(), 4, "line: {line}");
    assert_eq!(fields[0], "t003");
    assert!(fields[1] == "deceptive" || fields[1] == "truthful");
    let (w, l) = fields[2].split_once(':').expect("tally");
    let (w, l): (u32, u32) = (w.parse().unwrap(), l.parse().unwrap());
    assert_eq!(w + l, 3);
    assert!(w > l);
    assert_eq!(fields[3].split(',').count(), 3);

    // Directory: one line per file in sorted filename order.
    let out = bin()
        .args(["--config"])
        .arg(&s.config)
        .arg("predict")
        .arg(s.root.join("deceptive"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let ids: Vec<&str> = text.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(ids.len(), 10);
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted, "directory output must follow sorted filenames");

    // Empty document: verdict from priors and biases, not a crash.
    let empty = s.root.join("empty.txt");
    fs::write(&empty, "").unwrap();
    let out = bin()
        .args(["--config"])
        .arg(&s.config)
        .arg("predict")
        .arg(&empty)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("empty\t"));
}

#[test]
fn evaluate_writes_a_deterministic_report() {
    let s = setup(10);
    let run = || {
        let out = bin()
            .args(["--config"])
            .arg(&s.config)
            .args(["evaluate", "--member", "unigram_nb"])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        fs::read_to_string(s.out.join("eval_unigram_nb.tsv")).unwrap()
    };
    let first = run();
    let second = run();

    assert!(first.contains("# generated_at "));
    assert!(first.contains("member.unigram_nb.classifier=nb(alpha=1)"));
    assert!(first.contains("protocol.folds=5"));
    assert!(first.lines().any(|l| l.starts_with("overall\t")));

    let strip = |s: &str| {
        s.lines()
            .filter(|l| !l.starts_with("# generated_at"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&first), strip(&second));
}

#[test]
fn evaluate_unknown_member_is_a_usage_error() {
    let s = setup(10);
    let out = bin()
        .args(["--config"])
        .arg(&s.config)
        .args(["evaluate", "--member", "nope"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nope"));
}

#[test]
fn sweep_writes_rows_for_each_rank() {
    let s = setup(10);
    let out = bin()
        .args(["--config"])
        .arg(&s.config)
        .args(["sweep", "--ranks", "2,4", "--variant", "plain"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let report = fs::read_to_string(s.out.join("sweep.tsv")).unwrap();
    assert!(report.contains("variant\tk\teffective_k\ttrain_accuracy\ttest_accuracy"));
    assert!(report.contains("lsi\t2\t"));
    assert!(report.contains("lsi\t4\t"));
    assert!(!report.contains("sprinkled_lsi"));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let s = setup(2);
    let bad = s.root.join("bad.toml");
    fs::write(&bad, "[corpus]\nroots = \"typo\"\n").unwrap();
    let out = bin()
        .args(["--config"])
        .arg(&bad)
        .arg("ingest")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("roots"));
}

#[test]
fn solver_non_convergence_exits_3() {
    let s = setup(10);
    let members = s.root.join("strict.toml");
    fs::write(
        &members,
        r#"
[[member]]
id = "svm"
min_df = 1

[member.channel]
type = "unigram_count"

[member.classifier]
type = "svm"
max_iter = 1
tol = 1e-12
"#,
    )
    .unwrap();
    let config = s.root.join("strict_run.toml");
    fs::write(
        &config,
        format!(
            "[corpus]\nroot = {root:?}\n\n[ensemble]\nspec = {members:?}\n\n[output]\ndir = {out:?}\n",
            root = s.root.to_str().unwrap(),
            members = members.to_str().unwrap(),
            out = s.out.to_str().unwrap(),
        ),
    )
    .unwrap();
    let out = bin()
        .args(["--config"])
        .arg(&config)
        .arg("train")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("did not converge"));
}

#[test]
fn concepts_prints_both_poles() {
    let s = setup(10);
    let out = bin()
        .args(["--config"])
        .arg(&s.config)
        .args(["concepts", "--k", "3", "--concept", "1", "--top", "5"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("# concept 1"));
    assert!(text.contains("rank\tpositive_term\tloading\tnegative_term\tloading"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#') && !l.starts_with("rank")).count(), 5);
}
