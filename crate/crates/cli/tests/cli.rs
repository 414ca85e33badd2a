use std::path::Path;
use std::process::{Command, Output};

fn loadcast(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loadcast"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const TINY: &[&str] = &["--hidden1", "4", "--hidden2", "3", "--epochs", "1", "--batch-size", "512"];

#[test]
fn help_exits_zero_and_bad_flag_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&loadcast(dir.path(), &["--help"])), 0);
    assert_eq!(code(&loadcast(dir.path(), &["run", "--no-such-flag"])), 1);
}

#[test]
fn invalid_config_exits_one_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = loadcast(dir.path(), &["run", "--synth", "--set", "window=0", "--output-dir", "out"]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!dir.path().join("out").exists());

    let o = loadcast(dir.path(), &["run", "--output-dir", "out"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn stage_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "--synth", "--synth-start-year", "2018", "--anomaly", "off", "--test-year", "2030"];
    args.extend_from_slice(TINY);
    args.extend_from_slice(&["--output-dir", "out"]);
    let o = loadcast(dir.path(), &args);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("window"));
    assert!(dir.path().join("out/failed/failure.json").exists());
}

#[test]
fn dry_run_prints_plan_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let o = loadcast(dir.path(), &["run", "--synth", "--loss", "al2", "--seed", "9", "--dry-run", "--output-dir", "out"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("\"al2\""));
    assert!(text.contains("season S3 model seed"));
    assert!(!dir.path().join("out").exists());

    let o = loadcast(
        dir.path(),
        &["matrix", "--synth", "--losses", "mse,al1,al2", "--anomaly-modes", "off,detect_substitute", "--dry-run"],
    );
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("6 cells"));
}

#[test]
fn stage_commands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |args: &[&str]| {
        let o = loadcast(d, args);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        stdout(&o)
    };
    run(&["synth", "--out", "in.csv", "--holidays-out", "hol.txt", "--start-year", "2018", "--end-year", "2019"]);
    run(&["ingest", "--csv", "in.csv", "--holidays", "hol.txt", "--out-dir", "ds"]);
    for s in ["S1", "S2", "S3"] {
        assert!(d.join(format!("ds/{s}_scaled.csv")).exists());
    }
    run(&[
        "inject-outliers", "--dataset", "ds/S2_scaled.csv", "--scaler", "ds/scaler.json", "--rate", "0.01", "--seed", "4",
        "--out", "inj.csv", "--truth-out", "truth.json",
    ]);
    let text = run(&[
        "detect", "--dataset", "inj.csv", "--scaler", "ds/scaler.json", "--truth", "truth.json", "--out", "clean.csv",
        "--report", "det.json",
    ]);
    assert!(text.contains("recall"));
    let det: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("det.json")).unwrap()).unwrap();
    assert!(det["score"]["recall"].as_f64().unwrap() > 0.9);

    let mut train = vec!["train", "--csv", "in.csv", "--holidays", "hol.txt", "--season", "S2", "--checkpoint-out", "ck"];
    train.extend_from_slice(TINY);
    run(&train);
    assert!(d.join("ck/S2.ckpt").exists());
    assert!(!d.join("ck/S1.ckpt").exists());

    run(&[
        "evaluate", "--checkpoint", "ck/S2.ckpt", "--dataset", "ds/S2_scaled.csv", "--out", "rep.json", "--histogram-out",
        "h.csv",
    ]);
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("rep.json")).unwrap()).unwrap();
    let total = rep["n_under"].as_u64().unwrap() + rep["n_over"].as_u64().unwrap() + rep["n_exact"].as_u64().unwrap();
    let hist = std::fs::read_to_string(d.join("h.csv")).unwrap();
    let counted: u64 = hist.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, counted);
    assert_eq!(rep["metadata"]["season"], "S2");
}

#[test]
fn season_outside_mode_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = loadcast(dir.path(), &["train", "--synth", "--season", "ALL", "--dry-run"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn stages_rerun_from_pipeline_artifacts_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |args: &[&str]| {
        let o = loadcast(d, args);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    };
    let mut args = vec!["run", "--synth", "--synth-start-year", "2018", "--output-dir", "out"];
    args.extend_from_slice(TINY);
    run(&args);
    let read = |p: &str| std::fs::read(d.join(p)).unwrap_or_else(|e| panic!("{p}: {e}"));

    run(&["ingest", "--csv", "out/datasets/filled.csv", "--holidays", "out/datasets/holidays.txt", "--out-dir", "re"]);
    assert_eq!(read("re/scaler.json"), read("out/datasets/scaler.json"));
    for s in ["S1", "S2", "S3"] {
        assert_eq!(read(&format!("re/{s}_scaled.csv")), read(&format!("out/datasets/{s}_scaled.csv")), "{s}");
    }

    run(&["detect", "--dataset", "out/datasets/S3_scaled.csv", "--scaler", "out/datasets/scaler.json", "--out", "S3_clean.csv"]);
    assert_eq!(read("S3_clean.csv"), read("out/datasets/S3_clean.csv"));

    run(&[
        "evaluate", "--checkpoint", "out/checkpoints/S3.ckpt", "--dataset", "out/datasets/S3_clean.csv", "--histogram-out",
        "S3_hist.csv", "--out", "S3.json",
    ]);
    assert_eq!(read("S3_hist.csv"), read("out/histograms/S3.csv"));
}
