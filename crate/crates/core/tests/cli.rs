use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_translationese"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn small_corpus(dir: &Path) {
    ok(
        dir,
        &[
            "--seed",
            "3",
            "synth",
            "--n-chunks-per-class",
            "20",
            "--chunk-size",
            "500",
            "--documents",
        ],
    );
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path());
    let mut reports = vec![];
    for out in ["a", "b"] {
        ok(
            dir.path(),
            &[
                "--seed",
                "8",
                "--out",
                out,
                "label",
                "--chunks",
                "chunks.jsonl",
                "--reference",
                "reference.jsonl",
            ],
        );
        reports.push(std::fs::read(dir.path().join(out).join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let report: serde_json::Value = serde_json::from_slice(&reports[0]).unwrap();
    assert_eq!(report["config"]["seed"], 8);
    assert!(report["config_hash"].as_str().is_some_and(|h| !h.is_empty()));
}

#[test]
fn seed_changes_the_synthetic_sample() {
    let dir = tempfile::tempdir().unwrap();
    for (seed, out) in [("1", "a"), ("2", "b")] {
        ok(
            dir.path(),
            &[
                "--seed",
                seed,
                "--out",
                out,
                "synth",
                "--n-chunks-per-class",
                "5",
                "--chunk-size",
                "300",
            ],
        );
    }
    let read = |out: &str| std::fs::read(dir.path().join(out).join("chunks.jsonl")).unwrap();
    assert_ne!(read("a"), read("b"));
}

#[test]
fn report_echoes_inputs_and_exports_curves() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path());
    ok(
        dir.path(),
        &[
            "sweep",
            "--chunks",
            "chunks.jsonl",
            "--reference",
            "reference.jsonl",
            "--points",
            "20,40,500",
        ],
    );
    ok(dir.path(), &["--out", "summary", "report", "curve.json"]);
    let csv = std::fs::read_to_string(dir.path().join("summary/curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("point,mean_accuracy,std,seeds"));
    assert_eq!(lines.count(), 3);
    let curve: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("curve.json")).unwrap()).unwrap();
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("summary/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["curve"], curve);
    assert!(curve["points"][2]["warning"].is_string());
}

#[test]
fn failures_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path());
    std::fs::write(dir.path().join("blocker"), "").unwrap();
    let cases: [&[&str]; 4] = [
        &["--out", "blocker/sub", "synth", "--n-chunks-per-class", "2"],
        &["label", "--chunks", "chunks.jsonl"],
        &["label", "--chunks", "missing.jsonl", "--reference", "reference.jsonl"],
        &["--config", "bad.json", "cluster", "--chunks", "chunks.jsonl"],
    ];
    std::fs::write(dir.path().join("bad.json"), r#"{"seed": 1, "no_such_field": 2}"#).unwrap();
    for args in cases {
        let out = run(dir.path(), args);
        assert!(!out.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"), "{args:?}");
    }
}
