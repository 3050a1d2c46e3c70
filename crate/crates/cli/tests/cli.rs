use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use emms_cli::npy::write_npy;
use emms_core::Matrix;

fn emms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emms"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn synth(dir: &Path) {
    let out = emms(&[
        "synth",
        "--out",
        dir.to_str().unwrap(),
        "--n",
        "100",
        "--d",
        "6",
        "--l",
        "3",
        "--quality",
        "1.0,0.5,0.0",
        "--seed",
        "9",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn synth_rank_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let provenance = fs::read_to_string(dir.path().join("synth.json")).unwrap();
    assert!(provenance.contains("ChaCha8Rng"));

    let manifest = dir.path().join("manifest.json");
    let report_path = dir.path().join("report.json");
    let out = emms(&[
        "rank",
        manifest.to_str().unwrap(),
        "--algorithm",
        "fast",
        "--max-iters",
        "3",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["schema_version"], "1");
    assert_eq!(report["config"]["algorithm"], "fast");
    assert_eq!(report["entries"].as_array().unwrap().len(), 3);
    assert!(report["metrics"]["kendall_tau"].is_number());

    let scores: String = std::iter::once("model,score\n".to_string())
        .chain(report["entries"].as_array().unwrap().iter().map(|e| {
            format!(
                "{},{}\n",
                e["model_id"].as_str().unwrap(),
                e["t_score"].as_f64().unwrap()
            )
        }))
        .collect();
    let scores_path = dir.path().join("t.csv");
    fs::write(&scores_path, scores).unwrap();
    let gt = dir.path().join("ground_truth.csv");
    let out = emms(&[
        "eval",
        scores_path.to_str().unwrap(),
        "--ground-truth",
        gt.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let eval: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(
        eval["metrics"]["kendall_tau"],
        report["metrics"]["kendall_tau"]
    );
}

#[test]
fn score_one_model() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let root = dir.path();
    let out = emms(&[
        "score",
        "--features",
        root.join("features/model-000.npy").to_str().unwrap(),
        "--flabels",
        root.join("flabels/oracle-0.npy").to_str().unwrap(),
        root.join("flabels/oracle-1.npy").to_str().unwrap(),
        root.join("flabels/oracle-2.npy").to_str().unwrap(),
        "--tol",
        "1e-8",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["entries"][0]["t_score"].as_f64().unwrap() <= 0.0);
}

#[test]
fn bench_on_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let out = emms(&["bench", dir.path().join("manifest.json").to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["entries"].as_array().unwrap().len(), 3);
    assert!(report["entries"][0]["rel_diff"].is_number());
}

#[test]
fn exit_codes() {
    assert_eq!(
        emms(&["rank", "/no/such/manifest.json"]).status.code(),
        Some(1)
    );
    assert_eq!(
        emms(&["rank", "x.json", "--algorithm", "newton"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(emms(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(emms(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    write_npy(
        dir.path().join("features/model-001.npy"),
        &Matrix::filled(100, 2, 1.0),
    )
    .unwrap();
    let out = emms(&[
        "rank",
        dir.path().join("manifest.json").to_str().unwrap(),
        "--algorithm",
        "fast",
        "--ridge",
        "0",
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("model-001"));
}
