use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"{"seed": 3, "calibration_draws": 6, "permutations": 4, "explain_stride": 40,
 "mlp": {"input_dim": 0, "epochs": 3, "hidden": 16, "seed": 0},
 "synthetic": {"participants": 120, "seed": 0}}"#;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riskdecode"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("RISKDECODE_DATA_DIR")
        .output()
        .expect("spawn riskdecode")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = run(out, args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn trajectory_files(out: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(out.join("trajectories"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    v.sort();
    v
}

#[test]
fn generate_writes_catalog_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    ok(&out, &["generate"]);
    let files = trajectory_files(&out);
    assert_eq!(files.len(), 105);
    let first: Vec<Vec<u8>> = files.iter().map(|f| fs::read(f).unwrap()).collect();
    let text = String::from_utf8(first[0].clone()).unwrap();
    assert!(text.starts_with("# riskdecode "));

    ok(&out, &["generate"]);
    let again: Vec<Vec<u8>> = trajectory_files(&out).iter().map(|f| fs::read(f).unwrap()).collect();
    assert_eq!(first, again);

    ok(&out, &["--scenario", "HB", "generate"]);
    assert_eq!(trajectory_files(&out).len(), 27);
}

#[test]
fn ingest_filters_an_anticorrelated_participant() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let fixture = dir.path().join("ratings.csv");
    let mut body = String::from("participant_id,event_id,clip_index,rating\n");
    for (p, seq) in [(1, [1, 3, 6, 4, 2]), (2, [2, 4, 7, 5, 3]), (3, [7, 5, 1, 3, 6])] {
        for (c, r) in seq.iter().enumerate() {
            body.push_str(&format!("{p},1,{},{r}\n", c + 1));
        }
    }
    fs::write(&fixture, body).unwrap();
    ok(&out, &["ingest", fixture.to_str().unwrap()]);
    let ratings = fs::read_to_string(out.join("ratings.csv")).unwrap();
    let rows: Vec<&str> = ratings.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| !r.starts_with("3,")));
    let index: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("index.json")).unwrap()).unwrap();
    assert_eq!(index["data"]["raw_ratings"], 15);
    assert_eq!(index["data"]["valid_ratings"], 10);
    assert_eq!(index["data"]["participants"], 2);
    assert_eq!(index["data"]["dropped"], serde_json::json!([[1, 3]]));
}

#[test]
fn ingest_reports_the_offending_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let fixture = dir.path().join("bad.csv");
    fs::write(&fixture, "participant_id,event_id,clip_index,rating\n1,1,1,4\n1,1,2,eleven\n").unwrap();
    let o = run(&out, &["ingest", fixture.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn report_without_predictions_names_the_missing_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(&out, &["report"]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("missing upstream artifact"), "{err}");
    assert!(err.contains("riskdecode reconstruct"), "{err}");
}

#[test]
fn ingest_synthetic_requires_events() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&dir.path().join("o"), &["ingest", "--synthetic"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("riskdecode generate"));
}

#[test]
fn full_pipeline_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, SMALL).unwrap();
    let c = cfg.to_str().unwrap();
    for stage in [
        vec!["generate"],
        vec!["ingest", "--synthetic"],
        vec!["reconstruct"],
        vec!["features"],
        vec!["calibrate"],
        vec!["train"],
        vec!["predict"],
        vec!["explain"],
        vec!["report"],
    ] {
        let mut args = vec!["--config", c];
        args.extend(stage);
        ok(&out, &args);
    }
    for f in [
        "curves.csv",
        "features/SVM.csv",
        "features/SVM_norm.json",
        "calibration/PCAD.json",
        "calibration/DRF_trace.csv",
        "models/LC_aborted.json",
        "models/MB_epochs.csv",
        "predictions.csv",
        "analytic.csv",
        "shap/HB.csv",
        "globals.csv",
        "report/comparison.csv",
        "report/histogram.csv",
        "report/heatmaps.csv",
        "manifest.json",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let cmp = fs::read_to_string(out.join("report/comparison.csv")).unwrap();
    assert!(cmp.lines().any(|l| l.starts_with("ALL,MLP,")));
    let header = cmp.lines().next().unwrap();
    assert!(header.contains("seed=3") && header.contains("predictions.csv:sha256="), "{header}");

    // Same seed, same trained weights.
    let before = fs::read(out.join("models/HB.json")).unwrap();
    ok(&out, &["--config", c, "--scenario", "HB", "train"]);
    assert_eq!(before, fs::read(out.join("models/HB.json")).unwrap());
}
