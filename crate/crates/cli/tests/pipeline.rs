//! CLI contract tests: exit codes, missing-artifact reporting, CSV
//! self-round-trips and staleness warnings.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aspect-topics"))
}

fn fixtures() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/toy")
        .canonicalize()
        .unwrap()
}

#[test]
fn missing_prerequisite_exits_2_and_names_the_path() {
    let out = tempfile::tempdir().unwrap();
    let result = bin()
        .args(["train", "--config"])
        .arg(fixtures().join("config.ini"))
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("missing prerequisite artifact"), "{stderr}");
    assert!(stderr.contains("corpus.json"), "{stderr}");
}

#[test]
fn unknown_subcommand_exits_1() {
    let result = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(result.status.code(), Some(1));
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.ini");
    std::fs::write(&config, "[paths]\ncorpus = x.jsonl\nmystery = 1\n").unwrap();
    let result = bin()
        .args(["ingest", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("mystery"), "{stderr}");
}

#[test]
fn finetune_requires_a_known_aspect() {
    let out = tempfile::tempdir().unwrap();
    for stage in [
        "ingest",
        "screen",
        "select-test",
        "train",
        "subtopics",
        "aspects",
        "atm",
    ] {
        let result = bin()
            .args([stage, "--config"])
            .arg(fixtures().join("config.ini"))
            .arg("--out")
            .arg(out.path())
            .output()
            .unwrap();
        assert!(result.status.success(), "{stage} failed");
    }
    let result = bin()
        .args(["finetune", "--aspect", "Nonexistent", "--config"])
        .arg(fixtures().join("config.ini"))
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("atm_Nonexistent.json"), "{stderr}");
}

#[test]
fn emitted_vocabulary_csv_reparses() {
    let out = tempfile::tempdir().unwrap();
    let result = bin()
        .args(["ingest", "--config"])
        .arg(fixtures().join("config.ini"))
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert!(result.status.success());
    let mut reader = csv::Reader::from_path(out.path().join("corpus/vocabulary.csv")).unwrap();
    assert_eq!(
        reader.headers().unwrap(),
        &csv::StringRecord::from(vec!["term", "count", "doc_freq"])
    );
    let mut rows = 0;
    for record in reader.records() {
        let record = record.unwrap();
        record.get(1).unwrap().parse::<u64>().unwrap();
        record.get(2).unwrap().parse::<u32>().unwrap();
        rows += 1;
    }
    assert!(rows > 50);
}

#[test]
fn every_emitted_csv_reparses() {
    let out = tempfile::tempdir().unwrap();
    let stages = [
        "ingest", "screen", "select-test", "train", "subtopics", "network",
        "aspects", "relevance", "atm", "infer", "cluster", "compare", "report",
    ];
    for stage in stages {
        let result = bin()
            .args([stage, "--config"])
            .arg(fixtures().join("config.ini"))
            .arg("--out")
            .arg(out.path())
            .output()
            .unwrap();
        assert!(result.status.success(), "{stage} failed");
    }
    fn walk(dir: &Path, csvs: &mut Vec<std::path::PathBuf>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, csvs);
            } else if path.extension().and_then(|e| e.to_str()) == Some("csv") {
                csvs.push(path);
            }
        }
    }
    let mut csvs = Vec::new();
    walk(out.path(), &mut csvs);
    assert!(csvs.len() >= 10, "expected a tree of CSV artifacts");
    for path in csvs {
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true) // the coherence scan has per-K column counts
            .from_path(&path)
            .unwrap();
        let mut rows = 0;
        for record in reader.records() {
            record.unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            rows += 1;
        }
        assert!(rows > 0, "{} is empty", path.display());
    }
}

#[test]
fn stale_upstream_artifacts_trigger_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    // local copy of the fixture project so the corpus can be edited
    let local = dir.path().join("proj");
    std::fs::create_dir_all(local.join("aspects")).unwrap();
    for f in ["docs.jsonl", "labels.csv", "gold_labels.csv", "config.ini"] {
        std::fs::copy(fixtures().join(f), local.join(f)).unwrap();
    }
    for f in ["Cryptography.txt", "Networks.txt", "Teleportation.txt"] {
        std::fs::copy(fixtures().join("aspects").join(f), local.join("aspects").join(f)).unwrap();
    }
    let run = |stage: &str| {
        bin()
            .args([stage, "--config"])
            .arg(local.join("config.ini"))
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap()
    };
    assert!(run("ingest").status.success());
    assert!(run("train").status.success());
    // grow the corpus and re-ingest: the recorded hash in the train
    // manifest no longer matches
    let mut docs = std::fs::read_to_string(local.join("docs.jsonl")).unwrap();
    docs.push_str("{\"id\":\"EXTRA\",\"abstract\":\"quantum channel capacity experiment\"}\n");
    std::fs::write(local.join("docs.jsonl"), docs).unwrap();
    assert!(run("ingest").status.success());
    let retrain = run("train");
    assert!(retrain.status.success());
    let stderr = String::from_utf8_lossy(&retrain.stderr);
    assert!(
        stderr.contains("different version"),
        "expected staleness warning, got: {stderr}"
    );
}
