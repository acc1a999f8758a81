//! End-to-end runs of the binary: exit codes, outputs and error messages.

use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_event2vec"))
        .args(args)
        .current_dir(dir)
        .env_remove("EVENT2VEC_SEED")
        .output()
        .unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn train_small(dir: &Path) {
    assert!(run(dir, &["gen-life", "--n", "100", "--seed", "1", "--out", "seqs.jsonl"]).status.success());
    let out = run(
        dir,
        &["train", "--data", "seqs.jsonl", "--dim", "8", "--epochs", "2", "--seed", "1", "--out", "model.json"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn help_exits_zero_and_bad_flag_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(run(dir.path(), &["train", "--no-such-flag"]).status.code(), Some(1));
}

#[test]
fn missing_input_is_an_io_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["train", "--data", "nope.jsonl", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nope.jsonl"));
    assert!(!dir.path().join("m.json").exists());
}

#[test]
fn malformed_data_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.jsonl"), "[\"a\",\"b\"]\n{oops\n").unwrap();
    let out = run(dir.path(), &["train", "--data", "bad.jsonl", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains(":2:"), "{}", stderr(&out));
}

#[test]
fn geometry_flag_mismatch_is_usage() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["gen-life", "--n", "10", "--seed", "1", "--out", "s.jsonl"]).status.success());
    let out = run(dir.path(), &["train", "--data", "s.jsonl", "--c", "2.0", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn additivity_on_hyperbolic_model_is_unsupported() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["gen-life", "--n", "50", "--seed", "1", "--out", "s.jsonl"]).status.success());
    let out = run(
        dir.path(),
        &["train", "--data", "s.jsonl", "--geometry", "hyperbolic", "--dim", "4", "--epochs", "1", "--seed", "1", "--out", "h.json"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let out = run(dir.path(), &["eval-additivity", "--model", "h.json", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_event_names_a_suggestion() {
    let dir = tempfile::tempdir().unwrap();
    train_small(dir.path());
    let out = run(dir.path(), &["neighbors", "--model", "model.json", "--event", "mariage"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("marriage"), "{}", stderr(&out));
}

#[test]
fn seed_from_environment_matches_flag() {
    let dir = tempfile::tempdir().unwrap();
    let flag = run(dir.path(), &["gen-life", "--n", "20", "--seed", "9", "--out", "a.jsonl"]);
    assert!(flag.status.success());
    let env = Command::new(env!("CARGO_BIN_EXE_event2vec"))
        .args(["gen-life", "--n", "20", "--out", "b.jsonl"])
        .current_dir(dir.path())
        .env("EVENT2VEC_SEED", "9")
        .output()
        .unwrap();
    assert!(env.status.success());
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.jsonl"), read("b.jsonl"));
}

#[test]
fn pca_and_analogy_outputs() {
    let dir = tempfile::tempdir().unwrap();
    train_small(dir.path());
    let out = run(dir.path(), &["export-pca", "--model", "model.json", "--dims", "3", "--out", "p.csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 4);
    assert!(lines.all(|l| l.split(',').count() == 4));

    let out = run(
        dir.path(),
        &["eval-analogy", "--model", "model.json", "--a", "marriage", "--b", "engagement", "--c", "parenthood", "--k", "3"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["ranked"].as_array().unwrap().len(), 3);
    assert_eq!(v["metric"], "cosine");
}

#[test]
fn resume_takes_shape_from_checkpoint_and_matches_full_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(run(d, &["gen-life", "--n", "80", "--seed", "3", "--out", "s.jsonl"]).status.success());
    let common = ["--data", "s.jsonl", "--geometry", "hyperbolic", "--dim", "6", "--seed", "3"];
    let full = run(d, &[&["train"], &common[..], &["--epochs", "3", "--out", "full.json"]].concat());
    assert!(full.status.success(), "{}", stderr(&full));
    let half = run(d, &[&["train"], &common[..], &["--epochs", "1", "--out", "half.json"]].concat());
    assert!(half.status.success(), "{}", stderr(&half));
    let resumed = run(
        d,
        &["train", "--data", "s.jsonl", "--seed", "3", "--resume", "half.json", "--epochs", "3", "--out", "resumed.json"],
    );
    assert!(resumed.status.success(), "{}", stderr(&resumed));
    let read = |f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read("full.json"), read("resumed.json"));
}
