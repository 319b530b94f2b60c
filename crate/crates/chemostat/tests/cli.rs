//! End-to-end tests of the command-line binary: exit codes, artifact files,
//! determinism, and flag handling.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chemostat"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

/// The reference two-tank setup: positive equilibrium exists and attracts.
const BASE_CONFIG: &str = r#"{
  "chemostat": {
    "V1": 0.4, "V2": 0.4, "Q": 1.0, "s_in": 10.0, "d": 0.5,
    "growth": {"kind": "monod", "mu_max": 1.0, "K": 0.5}
  },
  "seed": 42
}"#;

#[test]
fn help_and_version_exit_zero() {
    assert!(run(&["--help"]).status.success());
    assert!(run(&["--version"]).status.success());
    assert!(run(&["simulate", "--help"]).status.success());
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_config_exits_2_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", "{ not json");
    let traj = dir.path().join("traj.csv");
    let summary = dir.path().join("summary.json");
    let out = run(&[
        "simulate",
        "--config",
        &cfg,
        "--output",
        traj.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!traj.exists());
    assert!(!summary.exists());
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_config_field_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "extra.json",
        &BASE_CONFIG.replace("\"seed\": 42", "\"seed\": 42, \"typo\": 1"),
    );
    let out = run(&["equilibrium", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_override_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", BASE_CONFIG);
    let out = run(&["equilibrium", "--config", &cfg, "--v1", "-1.0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn negative_initial_state_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", BASE_CONFIG);
    let out = run(&[
        "simulate",
        "--config",
        &cfg,
        "--initial",
        "1.0,-0.5,1.0,1.0",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_writes_csv_and_summary_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", BASE_CONFIG);
    let mut artifacts = Vec::new();
    for pass in 0..2 {
        let traj = dir.path().join(format!("traj{pass}.csv"));
        let summary = dir.path().join(format!("summary{pass}.json"));
        let out = run(&[
            "simulate",
            "--config",
            &cfg,
            "--output",
            traj.to_str().unwrap(),
            "--summary",
            summary.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        artifacts.push((fs::read(&traj).unwrap(), fs::read(&summary).unwrap()));
    }
    // identical config and seed give byte-identical artifacts
    assert_eq!(artifacts[0], artifacts[1]);

    let csv = String::from_utf8(artifacts[0].0.clone()).unwrap();
    let mut lines = csv.split("\r\n");
    assert_eq!(lines.next(), Some("t,s1,x1,s2,x2"));
    assert!(lines.next().unwrap().starts_with("0"));

    let summary: serde_json::Value =
        serde_json::from_slice(&artifacts[0].1).unwrap();
    assert_eq!(summary["washout_is_unique"], false);
    assert_eq!(summary["converged_to"], "positive");
    assert_eq!(summary["equilibria"].as_array().unwrap().len(), 2);
}

#[test]
fn different_seeds_give_different_initial_states() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", BASE_CONFIG);
    let initial = |seed: &str| -> serde_json::Value {
        let summary = dir.path().join(format!("s{seed}.json"));
        let out = run(&[
            "simulate",
            "--config",
            &cfg,
            "--seed",
            seed,
            "--summary",
            summary.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let v: serde_json::Value =
            serde_json::from_slice(&fs::read(&summary).unwrap()).unwrap();
        v["initial_state"].clone()
    };
    assert_ne!(initial("1"), initial("2"));
}

#[test]
fn equilibrium_reports_stability_and_respects_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", BASE_CONFIG);
    let out = run(&["equilibrium", "--config", &cfg]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let eqs = report["equilibria"].as_array().unwrap();
    assert_eq!(eqs.len(), 2);
    assert_eq!(eqs[0]["kind"], "washout");
    assert_eq!(eqs[0]["stability"], "saddle");
    assert_eq!(eqs[1]["kind"], "positive");
    assert_eq!(eqs[1]["stability"], "locally_exp_stable");
    assert_eq!(eqs[1]["eigenvalues"].as_array().unwrap().len(), 4);

    // with zero coupling the lateral tank decouples: s2 = s_in, x2 = 0
    // (V1 raised so the single working tank can still sustain growth)
    let out = run(&["equilibrium", "--config", &cfg, "--d", "0.0", "--v1", "2.0"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let eqs = report["equilibria"].as_array().unwrap();
    let positive = eqs.iter().find(|e| e["kind"] == "positive").unwrap();
    assert!((positive["s2"].as_f64().unwrap() - 10.0).abs() < 1e-12);
    assert_eq!(positive["x2"].as_f64().unwrap(), 0.0);
}

#[test]
fn sweep_reports_finite_existence_range_and_jobs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", BASE_CONFIG);
    let csv_for = |jobs: &str| -> (Vec<u8>, serde_json::Value) {
        let csv = dir.path().join(format!("sweep{jobs}.csv"));
        let summary = dir.path().join(format!("sweep{jobs}.json"));
        let out = run(&[
            "sweep",
            "--config",
            &cfg,
            "--grid-n",
            "64",
            "--jobs",
            jobs,
            "--output",
            csv.to_str().unwrap(),
            "--summary",
            summary.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let v: serde_json::Value =
            serde_json::from_slice(&fs::read(&summary).unwrap()).unwrap();
        (fs::read(&csv).unwrap(), v)
    };
    let (csv1, summary) = csv_for("1");
    let (csv4, _) = csv_for("4");
    // worker count must not change the result
    assert_eq!(csv1, csv4);

    let text = String::from_utf8(csv1).unwrap();
    assert!(text.starts_with("d,s1_star,s2_star,ds1_dd\r\n"));
    assert_eq!(text.trim_end().split("\r\n").count(), 65);

    // V1 mu_sup < Q here, so the positive branch exists only on (0, d_bar)
    assert_eq!(summary["case"], "finite_range");
    assert!(summary["d_bar"].as_f64().unwrap() > 0.0);
}

#[test]
fn design_free_d_matches_reference_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", BASE_CONFIG);
    let out = run(&["design", "--config", &cfg, "--free-d", "--sref", "5.9"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let result: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(result["kind"], "single_lateral_tank");
    assert_eq!(result["V1"].as_f64().unwrap(), 0.0);
    assert!((result["total_volume"].as_f64().unwrap() - 0.638886).abs() < 1e-4);
    let ratio = result["total_volume"].as_f64().unwrap()
        / result["baseline_volume"].as_f64().unwrap();
    assert!((ratio - 0.589).abs() < 1e-3);
}

#[test]
fn design_curve_writes_csv_with_minimum_at_reported_d() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", BASE_CONFIG);
    let csv = dir.path().join("curve.csv");
    let summary = dir.path().join("design.json");
    let out = run(&[
        "design",
        "--config",
        &cfg,
        "--free-d",
        "--sref",
        "5.9",
        "--curve",
        "--grid-n",
        "120",
        "--jobs",
        "3",
        "--output",
        csv.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let result: serde_json::Value =
        serde_json::from_slice(&fs::read(&summary).unwrap()).unwrap();
    let d_star = result["d"].as_f64().unwrap();
    let v_star = result["total_volume"].as_f64().unwrap();

    let text = String::from_utf8(fs::read(&csv).unwrap()).unwrap();
    let mut lines = text.trim_end().split("\r\n");
    assert_eq!(lines.next(), Some("d,V_opt,kind"));
    let mut best: Option<(f64, f64)> = None;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 3);
        if fields[1].is_empty() {
            continue;
        }
        let d: f64 = fields[0].parse().unwrap();
        let v: f64 = fields[1].parse().unwrap();
        if best.is_none_or(|(_, bv)| v < bv) {
            best = Some((d, v));
        }
    }
    let (d_best, v_best) = best.unwrap();
    // the grid minimum must sit near the analytic optimum
    assert!((d_best - d_star).abs() < 0.1 * d_star);
    assert!(v_best >= v_star - 1e-12);
    assert!(v_best < 1.02 * v_star);
}

#[test]
fn design_without_s_ref_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", BASE_CONFIG);
    let out = run(&["design", "--config", &cfg, "--free-d"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_sections_supply_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("from_config.json");
    let body = format!(
        r#"{{
  "chemostat": {{
    "V1": 0.4, "V2": 0.4, "Q": 1.0, "s_in": 10.0, "d": 0.5,
    "growth": {{"kind": "monod", "mu_max": 1.0, "K": 0.5}}
  }},
  "simulate": {{
    "initial": [5.0, 1.0, 5.0, 1.0],
    "horizon": 200.0,
    "summary": {:?}
  }}
}}"#,
        summary.to_str().unwrap()
    );
    let cfg = write_config(dir.path(), "run.json", &body);
    let out = run(&["simulate", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_slice(&fs::read(&summary).unwrap()).unwrap();
    assert_eq!(v["initial_state"]["s1"].as_f64().unwrap(), 5.0);
    assert_eq!(v["converged_to"], "positive");
}
