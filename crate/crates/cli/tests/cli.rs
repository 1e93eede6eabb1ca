use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_attrex"));
    c.current_dir(env!("CARGO_MANIFEST_DIR"));
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn attrex")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_lines(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn build_data_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("labels.jsonl");
    ok(&[
        "build-data",
        "--dialogues",
        "tests/fixtures/dialogues.jsonl",
        "--personas",
        "tests/fixtures/personas.jsonl",
        "--scorer",
        "substring",
        "--threshold",
        "0.5",
        "--out",
        p(&out),
    ]);
    let golden = std::fs::read("tests/fixtures/golden_labels.jsonl")
        .or_else(|_| std::fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden_labels.jsonl")))
        .unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), golden);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("labels.jsonl.report.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["user_utterances"], 18);
}

#[test]
fn empty_dialogues_give_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let out = dir.path().join("labels.jsonl");
    let o = ok(&[
        "build-data",
        "--dialogues",
        p(&empty),
        "--personas",
        "tests/fixtures/personas.jsonl",
        "--out",
        p(&out),
    ]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no dialogues"));
    let lines = read_lines(&out);
    assert_eq!(lines.len(), 1);
    assert!(lines[0].get("meta").is_some());
}

#[test]
fn defective_dialogues_are_skipped_and_counted() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("labels.jsonl");
    let report = dir.path().join("report.json");
    ok(&[
        "build-data",
        "--dialogues",
        "tests/fixtures/dialogues_defective.jsonl",
        "--personas",
        "tests/fixtures/personas.jsonl",
        "--scorer",
        "substring",
        "--threshold",
        "0.5",
        "--out",
        p(&out),
        "--report",
        p(&report),
    ]);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["report"]["skipped_dialogues"], 3);
    assert_eq!(read_lines(&out).len() - 1, 9);
}

#[test]
fn malformed_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"dialogue_id\": 3}\n").unwrap();
    let o = run(&[
        "build-data",
        "--dialogues",
        p(&bad),
        "--personas",
        "tests/fixtures/personas.jsonl",
        "--out",
        p(&dir.path().join("x.jsonl")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.jsonl:1:"));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(run(&["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
    let o = run(&[
        "build-data",
        "--dialogues",
        "tests/fixtures/dialogues.jsonl",
        "--personas",
        "tests/fixtures/personas.jsonl",
        "--threshold",
        "1.5",
        "--out",
        "/dev/null",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run(&["extract", "--checkpoint", "missing.json", "--text", "hi"]).status.code(), Some(2));
}

const TINY: &[&str] = &["--set", "hidden=6", "--set", "word_dim=6", "--set", "char_dim=3", "--set", "hops=2"];

fn train(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut args = vec!["train", "--train", "tests/fixtures/golden_labels.jsonl", "--out-dir", p(&out)];
    args.extend_from_slice(TINY);
    args.extend_from_slice(extra);
    ok(&args);
    out
}

#[test]
fn zero_epochs_writes_the_initialisation() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = train(dir.path(), "r", &["--epochs", "0", "--seed", "4"]);
    let a = std::fs::read(run_dir.join("checkpoint-000.json")).unwrap();
    assert_eq!(a, std::fs::read(run_dir.join("last.json")).unwrap());
    assert_eq!(read_lines(&run_dir.join("metrics.jsonl")).len(), 1);
    let again = train(dir.path(), "s", &["--epochs", "0", "--seed", "4"]);
    assert_eq!(a, std::fs::read(again.join("last.json")).unwrap());
    let other = train(dir.path(), "t", &["--epochs", "0", "--seed", "5"]);
    assert_ne!(a, std::fs::read(other.join("last.json")).unwrap());
}

#[test]
fn training_is_reproducible_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let a = train(dir.path(), "a", &["--epochs", "3"]);
    let b = train(dir.path(), "b", &["--epochs", "3"]);
    for f in ["metrics.jsonl", "last.json", "checkpoint-002.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = train(dir.path(), "c", &["--epochs", "3", "--stop-after", "1"]);
    assert!(!c.join("checkpoint-002.json").exists());
    ok(&["train", "--train", "tests/fixtures/golden_labels.jsonl", "--out-dir", p(&c), "--resume", p(&c.join("last.json"))]);
    for f in ["metrics.jsonl", "last.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(c.join(f)).unwrap(), "{f}");
    }
    let log = read_lines(&a.join("metrics.jsonl"));
    assert_eq!(log.len(), 4);
    assert_eq!(log[0]["meta"]["seed"], 0);
    assert!(log[1].get("wall_seconds").is_none());
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "word_dropout = 0.3\nlr_start = 0.002\nmax_epochs = 1\nseed = 9\n").unwrap();
    let run_dir = train(dir.path(), "r", &["--config", p(&cfg), "--word-dropout", "0.2"]);
    let log = read_lines(&run_dir.join("metrics.jsonl"));
    let settings = &log[0]["meta"]["config"]["settings"];
    assert_eq!(settings["train"]["word_dropout"], 0.2);
    assert_eq!(settings["train"]["lr_start"], 0.002);
    assert_eq!(settings["train"]["batch_size"], 32);
    assert_eq!(settings["train"]["seed"], 9);
    assert_eq!(log.len(), 2);
    let o = run(&["train", "--train", "tests/fixtures/golden_labels.jsonl", "--out-dir", p(&dir.path().join("x")), "--set", "nonsense=1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn extract_preserves_order_and_is_pure() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = train(dir.path(), "r", &["--epochs", "2"]);
    let ckpt = run_dir.join("last.json");
    let input = dir.path().join("in.txt");
    std::fs::write(&input, "i have a dog\n\nhello , how are you\ni have a dog\n").unwrap();
    let out1 = dir.path().join("o1.jsonl");
    let out2 = dir.path().join("o2.jsonl");
    ok(&["extract", "--checkpoint", p(&ckpt), "--input", p(&input), "--out", p(&out1)]);
    ok(&["extract", "--checkpoint", p(&ckpt), "--input", p(&input), "--out", p(&out2)]);
    assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
    let lines = read_lines(&out1);
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[1]["utterance"], "i have a dog");
    assert_eq!(lines[2]["triplets"], serde_json::json!([]));
    assert_eq!(lines[1]["triplets"], lines[4]["triplets"]);
    let o = ok(&["extract", "--checkpoint", p(&ckpt), "--text", "i have a dog"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["triplets"], lines[1]["triplets"]);
}

#[test]
fn evaluate_self_comparison_and_predicate_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let gold = "tests/fixtures/golden_labels.jsonl";
    let report = dir.path().join("r.json");
    let o = ok(&["evaluate", "--test", gold, "--predictions", gold, "--out", p(&report)]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("F1 100.00"));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    for k in ["accuracy", "f1", "bleu1"] {
        assert_eq!(r["end_to_end"][k], 1.0, "{k}");
    }

    let run_dir = train(dir.path(), "r", &["--epochs", "1"]);
    let ckpt = run_dir.join("last.json");
    let o = ok(&["evaluate", "--checkpoint", p(&ckpt), "--test", gold, "--oracle", "generator", "--out", p(&report)]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("oracle Generator"));

    let lines: Vec<String> = std::fs::read_to_string(gold).unwrap().lines().map(String::from).collect();
    let mut meta: Value = serde_json::from_str(&lines[0]).unwrap();
    meta["meta"]["predicates"] = serde_json::json!(["have_pet", "something_else"]);
    let other = dir.path().join("other.jsonl");
    let mut text = meta.to_string();
    text.push('\n');
    for l in &lines[1..] {
        text.push_str(l);
        text.push('\n');
    }
    std::fs::write(&other, text).unwrap();
    let o = run(&["evaluate", "--checkpoint", p(&ckpt), "--test", p(&other)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("differ"));
}

#[test]
fn synth_writes_three_files_with_meta() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["synth", "--out-dir", p(dir.path()), "--dialogues", "3", "--seed", "8"]);
    for f in ["dialogues.jsonl", "personas.jsonl", "gold.jsonl"] {
        let lines = read_lines(&dir.path().join(f));
        assert_eq!(lines[0]["meta"]["seed"], 8, "{f}");
    }
    assert_eq!(read_lines(&dir.path().join("gold.jsonl")).len(), 16);
}
