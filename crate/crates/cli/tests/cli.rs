//! End-to-end runs of the experiment binary: catalog content, exact curve
//! oracles through the full pipeline, exit codes, and byte determinism of
//! the payload files across reruns and thread counts.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qcbeam"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Rows of the single CSV payload matching `stem_*.csv` in `dir`.
fn csv_rows(dir: &Path, stem: &str) -> Vec<Vec<String>> {
    let body = csv_body(dir, stem);
    body.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.to_string()).collect())
        .collect()
}

fn csv_body(dir: &Path, stem: &str) -> String {
    let mut matches: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            name.starts_with(&format!("{stem}_")) && name.ends_with(".csv")
        })
        .collect();
    assert_eq!(matches.len(), 1, "one {stem} payload in {}", dir.display());
    fs::read_to_string(matches.remove(0)).unwrap()
}

fn summary_value(body: &str, key: &str) -> String {
    let tag = format!("# {key}=");
    body.lines()
        .find_map(|l| l.strip_prefix(&tag))
        .unwrap_or_else(|| panic!("summary line {key} present"))
        .to_string()
}

#[test]
fn zoo_lists_catalog_with_caps() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["zoo"], tmp.path());
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("identity"));
    assert!(text.contains("logpower_d2"));
    assert!(text.contains("snowflake"));
    assert!(text.contains("M=-1"));
    assert!(text.contains("n=3"));
}

#[test]
fn rho_curve_identity_is_exact_through_the_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &["rho-curve", "--seed", "7", "--budget", "2048", "--out", "o"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for row in csv_rows(&tmp.path().join("o"), "rho-curve") {
        let t: f64 = row[0].parse().unwrap();
        let rho_tilde: f64 = row[1].parse().unwrap();
        assert!((rho_tilde - t).abs() < 1e-12, "rho~({t}) = {rho_tilde}");
    }
}

#[test]
fn rho_curve_half_map_shifts_by_log_two() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("exp.toml"),
        "seed = 3\nbudget = 2048\nout = \"o\"\n\n[map]\nlabel = \"half\"\n\n[rho-curve]\nt-min = -6.0\nt-max = -2.0\npoints = 5\n",
    )
    .unwrap();
    let out = run(&["rho-curve", "--config", "exp.toml"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&tmp.path().join("o"), "rho-curve");
    assert_eq!(rows.len(), 5);
    for row in rows {
        let t: f64 = row[0].parse().unwrap();
        let rho_tilde: f64 = row[1].parse().unwrap();
        assert!(
            (rho_tilde - (t - 2.0f64.ln())).abs() < 1e-12,
            "rho~({t}) = {rho_tilde}"
        );
    }
}

#[test]
fn bip_identity_is_flat_and_bounded() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["bip", "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let body = csv_body(&tmp.path().join("o"), "bip");
    assert_eq!(summary_value(&body, "verdict"), "bounded");
    let sup: f64 = summary_value(&body, "supEstimate").parse().unwrap();
    assert!((sup - 2.0).abs() < 1e-9, "sup {sup}");
}

#[test]
fn json_format_carries_schema_and_result() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["bip", "--format", "json", "--out", "o"], tmp.path());
    assert!(out.status.success());
    let dir = tmp.path().join("o");
    let path = fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .find(|p| p.file_name().unwrap().to_string_lossy().starts_with("bip_"))
        .expect("bip json payload");
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(doc["schemaVersion"], 1);
    assert_eq!(doc["result"]["verdict"], "bounded");
    let manifest = fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .find(|p| p.file_name().unwrap().to_string_lossy().starts_with("manifest_"))
        .expect("manifest");
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(manifest).unwrap()).unwrap();
    assert_eq!(m["command"], "bip");
    assert_eq!(m["config"]["format"], "json");
    assert!(m["timestampUnixMs"].as_u64().is_some());
}

#[test]
fn payloads_are_byte_identical_across_reruns_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("exp.toml"),
        "seed = 11\nbudget = 131072\n\n[map]\nlabel = \"power\"\nd = 2.0\n\n[dq]\nt-min = -6.0\nt-max = -2.0\npoints = 5\nlags = [1.0, 2.0]\n",
    )
    .unwrap();
    let mut bodies = Vec::new();
    for (dir, threads) in [("a", "1"), ("b", "1"), ("c", "3")] {
        let out = run(
            &["dq", "--config", "exp.toml", "--out", dir, "--threads", threads],
            tmp.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        bodies.push(csv_body(&tmp.path().join(dir), "dq"));
    }
    assert_eq!(bodies[0], bodies[1], "rerun changed the payload");
    assert_eq!(bodies[0], bodies[2], "thread count changed the payload");
    // Same config hash on every run: the payload filenames match too.
    let name = |d: &str| {
        fs::read_dir(tmp.path().join(d))
            .unwrap()
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .find(|n| n.starts_with("dq_"))
            .unwrap()
    };
    assert_eq!(name("a"), name("c"));
}

#[test]
fn config_errors_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    // Unparseable config.
    fs::write(tmp.path().join("bad.toml"), "seed = [not toml").unwrap();
    let out = run(&["rho-curve", "--config", "bad.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("\"error\":\"config\""), "stderr: {err}");

    // Stochastic experiment without a seed.
    let out = run(&["rho-curve", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(2));

    // Heights at the cap of the log-corrected profile.
    fs::write(
        tmp.path().join("cap.toml"),
        "seed = 1\n\n[map]\nlabel = \"log-power\"\nd = 2.0\n\n[rho-curve]\nt-min = -4.0\nt-max = -1.0\npoints = 4\n",
    )
    .unwrap();
    let out = run(&["rho-curve", "--config", "cap.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));

    // Unknown map label.
    fs::write(
        tmp.path().join("label.toml"),
        "seed = 1\n\n[map]\nlabel = \"moebius\"\n",
    )
    .unwrap();
    let out = run(&["rho-curve", "--config", "label.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}
