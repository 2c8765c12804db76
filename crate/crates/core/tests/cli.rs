//! The `bran` binary end to end.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bran(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bran"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) {
    fs::write(dir.join(name), body).unwrap();
}

const SMALL: &str =
    r#"{"lambda_a": 2.8, "lambda_b": 25, "lambda_c": 1, "s": 4, "n_confirmations": 3, "beta": 0.2, "give_up": null}"#;

#[test]
fn latency_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "c.json", SMALL);
    let out = bran(&["latency", "--config", "c.json", "--n-confirmations", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["latency"].as_f64().unwrap() > 0.0);
    assert_eq!(v["relative_to"], "T_c");
}

#[test]
fn missing_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = bran(&["latency", "--config", "absent.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(&err).unwrap();
    assert_eq!(v["error"], "CONFIG_NOT_FOUND");
}

#[test]
fn bad_config_and_flags_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "typo.json", r#"{"lambda_x": 1}"#);
    assert_eq!(
        bran(&["bounds", "--config", "typo.json"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(bran(&["bounds", "--no-such-flag"], dir.path()).status.code(), Some(2));
    assert_eq!(bran(&["no-such-command"], dir.path()).status.code(), Some(2));
    assert_eq!(
        bran(
            &["security-sweep", "--beta-range", "0.1:0.2", "--n-range", "1:2"],
            dir.path()
        )
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn unstable_config_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "c.json", SMALL);
    let out = bran(&["latency", "--config", "c.json", "--lambda-a", "4.5"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().contains("\"UNSTABLE_CONFIG\""));
}

#[test]
fn command_line_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "c.json", SMALL);
    let from_file = stdout(&bran(&["bounds", "--config", "c.json"], dir.path()));
    let overridden = stdout(&bran(
        &["bounds", "--config", "c.json", "--n_confirmations", "1"],
        dir.path(),
    ));
    let flags_only = stdout(&bran(
        &["bounds", "--lambda-a", "2.8", "--lambda-b", "25", "--s", "4"],
        dir.path(),
    ));
    assert_ne!(from_file, overridden);
    assert_eq!(overridden, flags_only);
}

#[test]
fn validate_on_the_reference_grid() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        "grid.json",
        r#"{"lambda_a": 1.6, "lambda_b": 25, "lambda_c": 1, "s": 4}"#,
    );
    let out = bran(
        &["validate", "--config", "grid.json", "--n-range", "1:6", "--seed", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,analytic,sim_mean,sim_ci95,inside_ci"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.ends_with(",true")), "{text}");
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "c.json", SMALL);
    for args in [
        &["simulate", "--config", "c.json", "--served", "5000", "--seed", "4"][..],
        &["security", "--config", "c.json", "--mc-trials", "20000", "--seed", "4"][..],
        &[
            "mining",
            "--rate",
            "0.1",
            "--count",
            "500",
            "--histogram",
            "10",
            "--seed",
            "4",
        ][..],
    ] {
        let a = bran(args, dir.path());
        let b = bran(args, dir.path());
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn out_dir_pairs_each_file_with_a_manifest_line() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "c.json", SMALL);
    let out = bran(
        &[
            "steady-state",
            "--config",
            "c.json",
            "--out-dir",
            "run",
            "--i-max",
            "60",
            "--j-max",
            "60",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("run");
    let csv = fs::read_to_string(run.join("distribution.csv")).unwrap();
    assert!(csv.starts_with("i,j,probability\n"));
    assert!(!csv.contains('\r'));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("summary.json")).unwrap()).unwrap();
    assert!(summary["residual"].as_f64().unwrap() <= 1e-10);

    let manifest = fs::read_to_string(run.join("manifest.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = manifest.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["file"], "distribution.csv");
    assert_eq!(lines[1]["file"], "summary.json");
    for l in &lines {
        assert_eq!(l["subcommand"], "steady-state");
        assert_eq!(l["params"]["lambda_a"], 2.8);
        assert_eq!(l["params"]["i_max"], 60);
        assert_eq!(l["seed"], 0);
        assert_eq!(l["sha256"].as_str().unwrap().len(), 64);
        assert!(l["timestamp"].is_u64());
    }
}

#[test]
fn tables_and_summaries_switch_format() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "c.json", SMALL);
    let json = stdout(&bran(
        &["tradeoff", "--config", "c.json", "--n-max", "4", "--format", "json"],
        dir.path(),
    ));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    let csv = stdout(&bran(
        &["bounds", "--config", "c.json", "--lambda-b", "2", "--format", "csv"],
        dir.path(),
    ));
    assert_eq!(csv.lines().next(), Some("lower_block,lower_mms,upper"));
    assert!(csv.lines().nth(1).unwrap().ends_with(",inf"));
}

#[test]
fn sweep_and_dump_files() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "c.json", SMALL);
    let sweep = stdout(&bran(
        &[
            "security-sweep",
            "--beta-range",
            "0.1:0.3:0.1",
            "--n-range",
            "1:3",
            "--give-up",
            "6",
        ],
        dir.path(),
    ));
    let rows: Vec<&str> = sweep.lines().collect();
    assert_eq!(rows[0], "beta,n,give_up,probability");
    assert_eq!(rows.len(), 10);
    assert!(rows[7].starts_with("0.3,1,6,"));

    let out = bran(
        &[
            "simulate",
            "--config",
            "c.json",
            "--served",
            "2000",
            "--dump-latencies",
            "dump/req.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let dump = fs::read_to_string(dir.path().join("dump/req.csv")).unwrap();
    assert!(dump.starts_with("id,arrival,service_start,service_end\n"));
    assert_eq!(dump.lines().count(), 2001);
    assert!(dir.path().join("dump/manifest.jsonl").exists());
}
