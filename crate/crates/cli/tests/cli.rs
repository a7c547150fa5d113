//! End-to-end checks of the command-line interface: artifact schemas,
//! round-trips, seed provenance, and exit codes.

use std::process::{Command, Output};

fn flexmatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flexmatch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn eval_emits_rates_and_config() {
    let out = flexmatch(&["eval", "--budget", "0.6", "--alpha", "1", "--alpha-f", "5"]);
    let v = stdout_json(&out);
    let eta_os = v["eta_os"].as_f64().unwrap();
    let eta_ts = v["eta_ts"].as_f64().unwrap();
    let adv = v["adv_os"].as_f64().unwrap();
    assert!((adv - eta_os / eta_ts).abs() < 1e-12);
    assert!(adv < 1.0); // two-sided dominates here
    assert_eq!(v["config"]["seed"], 0);
    assert_eq!(v["config"]["command"], "eval");
    assert!(v["t_star_os"].as_array().unwrap().len() == 2);
}

#[test]
fn eval_rejects_inverted_rates_with_exit_2() {
    let out = flexmatch(&["eval", "--budget", "0.6", "--alpha", "2", "--alpha-f", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_csv_format_lists_key_values() {
    let out = flexmatch(&[
        "eval", "--budget", "0.5", "--alpha", "0.5", "--alpha-f", "2", "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("key,value\n"));
    assert!(text.lines().any(|l| l.starts_with("eta_os,")));
    assert!(text.lines().last().unwrap().starts_with("# config:"));
}

#[test]
fn simulate_reports_gap_against_formula() {
    let out = flexmatch(&[
        "simulate", "--budget", "0.6", "--alpha", "0", "--alpha-f", "2.5", "--side", "one",
        "--n", "2000", "--trials", "4", "--seed", "7",
    ]);
    let v = stdout_json(&out);
    let mean = v["mean"].as_f64().unwrap();
    let eta = v["formula_eta"].as_f64().unwrap();
    let gap = v["abs_gap"].as_f64().unwrap();
    assert!((gap - (mean - eta).abs()).abs() < 1e-15);
    assert!(gap < 0.05);
    assert_eq!(v["config"]["seed"], 7);

    // deterministic given the seed
    let again = flexmatch(&[
        "simulate", "--budget", "0.6", "--alpha", "0", "--alpha-f", "2.5", "--side", "one",
        "--n", "2000", "--trials", "4", "--seed", "7",
    ]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn simulate_custom_side_split() {
    let out = flexmatch(&[
        "simulate", "--budget", "0.6", "--alpha", "0.5", "--alpha-f", "2",
        "--side", "custom:0.2,0.4", "--n", "1000", "--trials", "2",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["config"]["side"], "custom:0.2,0.4");
    // bad split: exit 2
    let out = flexmatch(&[
        "simulate", "--budget", "0.6", "--alpha", "0.5", "--alpha-f", "2",
        "--side", "custom:0.2,0.1", "--n", "100", "--trials", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rde_small_run_tracks_formula() {
    let out = flexmatch(&[
        "rde", "--budget", "0.6", "--alpha", "1", "--alpha-f", "5", "--side", "two",
        "--pop-size", "20000", "--iters", "50", "--root-samples", "100000", "--seed", "3",
    ]);
    let v = stdout_json(&out);
    assert!(v["abs_gap"].as_f64().unwrap() < 0.02);
    let t_hat = v["t_hat"].as_array().unwrap();
    let t_star = v["t_star"].as_array().unwrap();
    for (h, s) in t_hat.iter().zip(t_star) {
        assert!((h.as_f64().unwrap() - s.as_f64().unwrap()).abs() < 0.05);
    }
}

#[test]
fn sweep_csv_parses_and_embeds_config() {
    let out = flexmatch(&[
        "sweep", "--budgets", "1.0", "--alpha-grid", "0.5:2:3", "--alpha-f-grid", "0.5:3:4",
        "--grid-n", "151", "--seed", "5",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let cells = flexmatch::atlas::cells_from_csv(&text).unwrap();
    assert!(!cells.is_empty());
    // alpha_f >= alpha cells only
    assert!(cells.iter().all(|c| c.alpha_f >= c.alpha));
    // B = 1: never a two-sided verdict
    assert!(cells
        .iter()
        .all(|c| c.verdict != flexmatch::atlas::Verdict::TwoSided));
    let config_line = text.lines().last().unwrap();
    assert!(config_line.starts_with("# config:"));
    assert!(config_line.contains("\"seed\":5") || config_line.contains("\"seed\": 5"));
}

#[test]
fn limits_and_bounds_report_scalars() {
    let out = flexmatch(&["limits", "--budget", "0.5", "--alpha", "0.3"]);
    let v = stdout_json(&out);
    assert!(v["u_os"].as_f64().unwrap() > 0.0);
    assert!((v["b_star"].as_f64().unwrap() - (2.0 - 2.0 * std::f64::consts::E / 3.0)).abs() < 1e-12);
    assert!(v["alpha_bar"].as_f64().unwrap() > 0.0);

    let out = flexmatch(&[
        "bounds", "--budget", "0.5", "--alpha", "0.05", "--alpha-f", "40",
    ]);
    let v = stdout_json(&out);
    let l = v["l_fmz"].as_f64().unwrap();
    let u = v["u_fmz"].as_f64().unwrap();
    assert!(v["admissible"].as_bool().unwrap());
    assert!(l > u); // certified two-sided dominance regime
    // budget outside (0,1): exit 2
    let out = flexmatch(&["bounds", "--budget", "1.0", "--alpha", "0.1", "--alpha-f", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_subset_prints_table() {
    let out = flexmatch(&["validate", "--criteria", "9,10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("criterion  9 PASS"));
    assert!(text.contains("criterion 10 PASS"));
    assert!(text.contains("OK: 2/2 criteria passed"));
    // unknown id: exit 2
    let out = flexmatch(&["validate", "--criteria", "12"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_flag_writes_artifact_file() {
    let dir = std::env::temp_dir().join("flexmatch-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("eval.json");
    let out = flexmatch(&[
        "eval", "--budget", "0.6", "--alpha", "1", "--alpha-f", "5",
        "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(v["eta_os"].as_f64().is_some());
    std::fs::remove_dir_all(&dir).ok();
}
