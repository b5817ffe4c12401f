use std::fs;
use std::process::{Command, Output};

fn labelnoise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_labelnoise"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(labelnoise(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(labelnoise(&["sweep", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(labelnoise(&["sweep", "--alphas", "fast"]).status.code(), Some(2));
    assert_eq!(labelnoise(&["synth", "--flip", "wobbly"]).status.code(), Some(2));
}

#[test]
fn help_exits_cleanly() {
    let out = labelnoise(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("sweep"));
}

#[test]
fn config_of_another_kind_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("synth.cfg");
    fs::write(&path, "kind = synthetic\n").unwrap();
    let out = labelnoise(&["sweep", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    fs::write(&path, "kind = noise-sweep\nwarp_factor = 9\n").unwrap();
    let out = labelnoise(&["sweep", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_passes_and_writes_csv() {
    let out = labelnoise(&["verify", "--trials", "50", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("check,trials,passed,max_violation,tightest_slack"));
    assert_eq!(lines.count(), 9);
}

#[test]
fn verify_defaults_to_json() {
    let out = labelnoise(&["verify", "--trials", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["checks"].as_array().unwrap().len(), 9);
}

#[test]
fn synth_dumps_the_link_grid() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("link.csv");
    let out = labelnoise(&[
        "synth",
        "--train-size",
        "500",
        "--test-size",
        "500",
        "--iterations",
        "50",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("z,u_hat,eta_bar"));
    assert_eq!(lines.count(), 161);
}

#[test]
fn sweep_csv_has_one_row_per_alpha() {
    let out = labelnoise(&["sweep", "--trials", "2", "--alphas", "1/8,8", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.1250,"));
}

#[test]
fn sweep_reads_a_csv_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let mut text = String::from("label,a,b\n");
    for i in 0..200 {
        let y = if i % 2 == 0 { 1 } else { -1 };
        let jitter = (i as f64 * 0.37).sin();
        text += &format!("{y},{},{}\n", 2.0 * y as f64 + jitter, jitter);
    }
    fs::write(&data, text).unwrap();
    let spec = format!("csv:{}", data.display());
    let out = labelnoise(&[
        "sweep",
        "--dataset",
        &spec,
        "--trials",
        "2",
        "--alphas",
        "1",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn missing_dataset_is_a_runtime_error() {
    let out = labelnoise(&["sweep", "--dataset", "csv:/nonexistent/data.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn isotonic_demo_writes_both_fits() {
    let out = labelnoise(&["isotonic-demo", "--points", "30", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("x,y,pav,lpav\n"));
    assert_eq!(text.lines().count(), 31);
}
