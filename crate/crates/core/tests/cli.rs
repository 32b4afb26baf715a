mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use docdistill::models::SoftTargetStore;

const SMALL: &str = r#"{
  "model": {"embedding_dim": 8, "hidden_units": 8, "embeddings_trainable": true},
  "teacher": {"hidden_units": 16},
  "train": {"epochs": 2, "batch_size": 8, "learning_rate": 0.01},
  "augment": {"multiplier": 2}
}"#;

struct Env {
    dir: tempfile::TempDir,
}

impl Env {
    fn new() -> Self {
        let env = Env {
            dir: tempfile::tempdir().unwrap(),
        };
        std::fs::write(env.config(), SMALL).unwrap();
        env
    }

    fn config(&self) -> PathBuf {
        self.dir.path().join("small.json")
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        let tiny = common::fixtures().join("tiny");
        Command::new(env!("CARGO_BIN_EXE_docdistill"))
            .args(args)
            .arg("--config")
            .arg(self.config())
            .arg("--data-dir")
            .arg(tiny)
            .output()
            .unwrap()
    }
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

fn ok(out: Output) -> Output {
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn stats_prints_table() {
    let env = Env::new();
    let out = ok(env.run(&["stats"]));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].split_whitespace().eq(["split", "C", "N", "W", "S"]));
    assert!(lines[1].starts_with("train"));
}

#[test]
fn stats_rejects_empty_and_malformed_input() {
    let env = Env::new();
    let empty = env.path("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(code(&env.run(&["stats", empty.to_str().unwrap()])), 2);
    let bad = env.path("bad.jsonl");
    std::fs::write(&bad, "{\"id\": \"x\", \"text\": 1}\n").unwrap();
    let out = env.run(&["stats", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn config_errors_exit_4() {
    let env = Env::new();
    assert_eq!(code(&env.run(&["stats", "--model.no_such_key", "3"])), 4);
    assert_eq!(code(&env.run(&["stats", "--distill.lambda", "-1"])), 4);
    assert_eq!(code(&env.run(&["no-such-command"])), 4);
}

#[test]
fn train_writes_run_dir_and_refuses_reuse() {
    let env = Env::new();
    let run = env.path("run");
    let r = run.to_str().unwrap();
    ok(env.run(&["train", "--run-dir", r]));
    for f in ["config.json", "report.json", "best.ckpt", "log.txt", "timing.json"] {
        assert!(run.join(f).exists(), "missing {f}");
    }
    let report: serde_json::Value = serde_json::from_slice(&read(&run.join("report.json"))).unwrap();
    assert_eq!(report["mode"], "train");
    assert_eq!(report["epochs"].as_array().unwrap().len(), 2);
    assert!(report.get("epoch_seconds").is_none());

    assert_eq!(code(&env.run(&["train", "--run-dir", r])), 5);
    ok(env.run(&["train", "--run-dir", r, "--overwrite"]));

    let out = ok(env.run(&["eval", "--checkpoint", run.join("best.ckpt").to_str().unwrap(), "--split", "val"]));
    let eval: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(eval["metric"], "micro_f1");
    assert_eq!(eval["value"], report["val"]["value"]);
}

#[test]
fn reruns_are_byte_identical() {
    let env = Env::new();
    let a = env.path("a");
    let b = env.path("b");
    ok(env.run(&["train", "--seed", "3", "--run-dir", a.to_str().unwrap()]));
    ok(env.run(&["train", "--seed", "3", "--run-dir", b.to_str().unwrap()]));
    assert_eq!(read(&a.join("report.json")), read(&b.join("report.json")));
    assert_eq!(read(&a.join("config.json")), read(&b.join("config.json")));
    assert_eq!(read(&a.join("best.ckpt")), read(&b.join("best.ckpt")));
}

#[test]
fn distill_needs_a_teacher() {
    let env = Env::new();
    let out = env.run(&["distill", "--run-dir", env.path("d").to_str().unwrap()]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let out = env.run(&[
        "distill",
        "--run-dir",
        env.path("d2").to_str().unwrap(),
        "--teacher.checkpoint",
        env.path("nope.ckpt").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn teacher_pipeline_end_to_end() {
    let env = Env::new();
    let teacher = env.path("teacher");
    ok(env.run(&["teacher-train", "--run-dir", teacher.to_str().unwrap()]));
    let ckpt = teacher.join("best.ckpt");
    let ckpt_s = ckpt.to_str().unwrap();

    // Frozen in-toolkit teacher with augmentation.
    let d = env.path("distill");
    ok(env.run(&["distill", "--run-dir", d.to_str().unwrap(), "--teacher.checkpoint", ckpt_s]));
    let log = String::from_utf8(read(&d.join("log.txt"))).unwrap();
    assert!(log.contains("transfer set: 48 records"), "{log}");
    let report: serde_json::Value = serde_json::from_slice(&read(&d.join("report.json"))).unwrap();
    assert_eq!(report["mode"], "distill");
    assert_eq!(report["train_examples"], 48);

    // Transfer set on disk.
    let t = env.path("transfer");
    ok(env.run(&["build-transfer", "--run-dir", t.to_str().unwrap(), "--teacher.checkpoint", ckpt_s]));
    let lines = std::fs::read_to_string(t.join("transfer").join("transfer.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 48);

    // Exported soft targets feed distillation without augmentation.
    let soft = env.path("soft.jsonl");
    ok(env.run(&["export-teacher-targets", "--teacher", ckpt_s, "--split", "train", "--out", soft.to_str().unwrap()]));
    let store = SoftTargetStore::open(&soft, None).unwrap();
    assert_eq!(store.len(), 24);
    let s = env.path("from-store");
    let out = env.run(&[
        "distill",
        "--run-dir",
        s.to_str().unwrap(),
        "--teacher.soft_targets",
        soft.to_str().unwrap(),
        "--augment.multiplier",
        "1",
    ]);
    ok(out);
    // A file teacher cannot score augmented copies.
    let out = env.run(&[
        "distill",
        "--run-dir",
        env.path("aug-store").to_str().unwrap(),
        "--teacher.soft_targets",
        soft.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    // Wrong regime for these soft targets.
    let out = env.run(&[
        "distill",
        "--run-dir",
        env.path("wrong-kind").to_str().unwrap(),
        "--teacher.soft_targets",
        soft.to_str().unwrap(),
        "--data-dir",
        common::fixtures().join("mini-singlelabel").to_str().unwrap(),
        "--task",
        "single-label",
    ]);
    assert_eq!(code(&out), 4);

    // Benchmark the teacher against itself and a student.
    let b = env.path("bench");
    ok(env.run(&[
        "bench",
        "--checkpoint",
        ckpt_s,
        "--checkpoint",
        d.join("best.ckpt").to_str().unwrap(),
        "--run-dir",
        b.to_str().unwrap(),
        "--bench.repetitions",
        "1",
    ]));
    let csv = std::fs::read_to_string(b.join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert_eq!(
        code(&env.run(&["bench", "--checkpoint", env.path("missing.ckpt").to_str().unwrap()])),
        5
    );
}

#[test]
fn teacher_vocabulary_mismatch_exits_4() {
    let env = Env::new();
    let teacher = env.path("teacher");
    ok(env.run(&["teacher-train", "--run-dir", teacher.to_str().unwrap(), "--corpus.min_count", "2"]));
    let out = env.run(&[
        "distill",
        "--run-dir",
        env.path("d").to_str().unwrap(),
        "--teacher.checkpoint",
        teacher.join("best.ckpt").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sweep_writes_csv() {
    let env = Env::new();
    let run = env.path("sweep");
    ok(env.run(&[
        "sweep",
        "--run-dir",
        run.to_str().unwrap(),
        "--sweep.sizes",
        "[4,8]",
        "--sweep.seeds",
        "[1,2]",
        "--train.epochs",
        "1",
    ]));
    let csv = std::fs::read_to_string(run.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], docdistill::evalbench::SWEEP_CSV_HEADER);
    assert_eq!(lines.len(), 3);
}
