//! End-to-end checks of the binary: flags, config files, formats, exit codes.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relu-moments"))
}

fn run(args: &[&str]) -> (String, String, Option<i32>) {
    let out = bin().args(args).output().expect("binary runs");
    (
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
        out.status.code(),
    )
}

#[test]
fn predict_fan_in_telescopes() {
    let (stdout, _, code) = run(&[
        "predict",
        "--shape",
        "4,8,8,1",
        "--schedule",
        "fan-in",
    ]);
    assert_eq!(code, Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout).expect("valid json");
    let preds = json["predictions"].as_array().unwrap();
    assert_eq!(preds.len(), 2);
    for p in preds {
        let sm = p["second_moment"].as_f64().unwrap();
        assert!((sm - 0.25).abs() < 1e-13, "{sm}");
    }
    // Fan-in preset: the forward pair of the schedule check holds.
    assert_eq!(json["schedule_checks"][0]["fan_in_beta_match"], true);
    assert_eq!(json["schedule_checks"][0]["forward_scale_preserved"], true);
}

#[test]
fn verify_small_run_passes_and_writes_file() {
    let dir = std::env::temp_dir().join(format!("relu-moments-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out_path = dir.join("report.json");
    let (_, stderr, code) = run(&[
        "verify",
        "--shape",
        "3,6,6,1",
        "--schedule",
        "fan-out",
        "--trials",
        "2000",
        "--seed",
        "5",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code, Some(0), "stderr: {stderr}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(json["summary"]["all_pass"], true);
    // Fan-out telescopes the backward variance to 1/n_L = 1.
    let pred = json["predictions"][0]["backward_variance"].as_f64().unwrap();
    assert!((pred - 1.0).abs() < 1e-12);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_with_flag_override() {
    let dir = std::env::temp_dir().join(format!("relu-moments-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("exp.cfg");
    std::fs::write(
        &cfg,
        "shape = 4,8,8,1\nschedule = fan-in\ntrials = 500\nseed = 1\n",
    )
    .unwrap();
    let (stdout, _, code) = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "800",
        "--format",
        "csv",
    ]);
    assert_eq!(code, Some(0));
    let lines: Vec<&str> = stdout.trim_end().lines().collect();
    assert!(lines[0].starts_with("label,k,p,"));
    // Flag overrode the file: every verdict row carries n_trials = 800.
    assert!(lines[1..].iter().all(|l| l.contains(",800,") || l.ends_with(",800")
        || l.split(',').nth(8) == Some("800")));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn invalid_config_exits_2() {
    let (_, stderr, code) = run(&["verify", "--shape", "4,8,2"]);
    assert_eq!(code, Some(2));
    assert!(stderr.contains("error"), "{stderr}");
    let (_, _, code) = run(&["verify", "--shape", "4,8,1", "--trials", "10"]);
    assert_eq!(code, Some(2));
    let (_, _, code) = run(&["verify", "--shape", "4,8,1", "--eps", "1.5"]);
    assert_eq!(code, Some(2));
    let (_, _, code) = run(&["predict", "--shape", "4,8,1", "--format", "yaml"]);
    assert_eq!(code, Some(2));
}

#[test]
fn detected_mismatch_exits_1() {
    // Width-1 hidden layers die with probability 1/2, so at layer 2 the
    // idealized backward second moment overshoots the truth by 2x, and the
    // width-conditioned forward brackets do not apply either. The verifier
    // must flag the gaps and exit 1.
    let (stdout, _, code) = run(&[
        "verify",
        "--shape",
        "2,1,1,1",
        "--schedule",
        "fan-in",
        "--trials",
        "50000",
        "--seed",
        "3",
    ]);
    assert_eq!(code, Some(1));
    let json: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(json["summary"]["all_pass"], false);
    let failed: Vec<&str> = json["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|v| v["pass"] == false)
        .map(|v| v["label"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"mean(delta^2)"), "{failed:?}");
    let expected_gaps = [
        "mean(delta^2)",
        "mean(f) in scale bracket",
        "var(f) in sandwich",
    ];
    assert!(
        failed.iter().all(|l| expected_gaps.contains(l)),
        "unexpected failures: {failed:?}"
    );
}

#[test]
fn bounds_sweep_small() {
    let (stdout, _, code) = run(&[
        "bounds",
        "--n-max",
        "300",
        "--i-max",
        "300",
        "--t-samples",
        "5000",
    ]);
    assert_eq!(code, Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(json["summary"]["all_pass"], true);
    assert_eq!(json["verdicts"].as_array().unwrap().len(), 6);
}

#[test]
fn custom_schedule_flag() {
    let (stdout, _, code) = run(&[
        "predict",
        "--shape",
        "2,3,4,1",
        "--schedule",
        "custom:0.9,1.1,0.8",
    ]);
    assert_eq!(code, Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(json["config"]["schedule"], "custom:0.9,1.1,0.8");
}
