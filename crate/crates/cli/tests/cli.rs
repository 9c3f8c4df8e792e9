//! End-to-end tests driving the built binary: argument handling, config
//! merging, report emission, exit codes, and the determinism contract.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn krsol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_krsol"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON document")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("report file exists"))
        .expect("report file is JSON")
}

const F1: &[&str] = &["--d", "1", "--n", "1", "--tau", "2", "--eps", "1"];

#[test]
fn stdout_reports_are_byte_deterministic() {
    let first = krsol(&[&["solve"], F1].concat());
    let second = krsol(&[&["solve"], F1].concat());
    assert_eq!(exit_code(&first), 0);
    assert_eq!(first.stdout, second.stdout);

    // The verify battery samples with a seeded generator, so it must
    // reproduce byte-for-byte as well.
    let v1 = krsol(&[&["verify"], F1, &["--seed", "5"]].concat());
    let v2 = krsol(&[&["verify"], F1, &["--seed", "5"]].concat());
    assert_eq!(exit_code(&v1), 0);
    assert_eq!(v1.stdout, v2.stdout);
}

#[test]
fn solve_emits_the_flat_shrinker_constants() {
    let out = krsol(&[&["solve"], F1].concat());
    assert_eq!(exit_code(&out), 0);
    let doc = stdout_json(&out);
    assert_eq!(doc["case"], "shrinking_noncompact");
    assert_eq!(doc["schema_version"], 1);
    let mu = doc["mu"].as_f64().unwrap();
    assert!((mu - std::f64::consts::SQRT_2).abs() < 1e-10, "mu = {mu}");
    assert_eq!(doc["nu"].as_f64().unwrap(), 0.0);
    let p = doc["asymptotics"]["p"].as_f64().unwrap();
    assert!((p - 1.0 / std::f64::consts::SQRT_2).abs() < 1e-3, "p = {p}");
    assert_eq!(doc["positivity"], true);
    for residual in doc["residuals"].as_array().unwrap() {
        assert_eq!(residual["pass"], true, "failing: {residual}");
    }
}

#[test]
fn csv_and_json_agree_at_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let table = dir.path().join("table.csv");
    let out = krsol(
        &[
            &["solve"],
            F1,
            &[
                "--out-report",
                report.to_str().unwrap(),
                "--out-table",
                table.to_str().unwrap(),
            ],
        ]
        .concat(),
    );
    assert_eq!(exit_code(&out), 0);
    assert!(out.stdout.is_empty(), "report went to a file, not stdout");

    let doc = read_json(&report);
    let text = std::fs::read_to_string(&table).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "phi,r,s,F,P,eig_horizontal,eig_fiber_tangential,eig_fiber_radial"
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), doc["grid"]["count"].as_u64().unwrap() as usize);
    assert_eq!(rows[0][1], doc["grid"]["r_first"].as_f64().unwrap());
    assert_eq!(
        rows.last().unwrap()[1],
        doc["grid"]["r_last"].as_f64().unwrap()
    );
    // Eigenvalues stay positive across the emitted table.
    for row in &rows {
        assert!(row[5] > 0.0 && row[6] > 0.0 && row[7] > 0.0, "row {row:?}");
    }
}

#[test]
fn steady_without_mu_exits_two() {
    let out = krsol(&["solve", "--d", "1", "--n", "1", "--tau", "1", "--eps", "1"]);
    assert_eq!(exit_code(&out), 2);
    assert!(out.stdout.is_empty());
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("mu"), "stderr: {msg}");
}

#[test]
fn degenerate_compact_closing_exits_three() {
    let out = krsol(&[
        "solve", "--d", "1", "--n", "1", "--tau", "2", "--eps", "0", "--compact",
    ]);
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn malformed_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{not json").unwrap();
    let out = krsol(&["solve", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);

    std::fs::write(&path, r#"{"d": 1, "unknown_knob": true}"#).unwrap();
    let out = krsol(&["solve", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn missing_config_file_exits_one() {
    let out = krsol(&["solve", "/nonexistent/config.json"]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn flags_override_config_file_fields() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"d": 1, "n": 1, "tau": "2", "eps": "1"}"#).unwrap();
    // Untwisting via the flag turns the constant into tau itself.
    let out = krsol(&["solve", path.to_str().unwrap(), "--eps", "0"]);
    assert_eq!(exit_code(&out), 0);
    let doc = stdout_json(&out);
    let mu = doc["mu"].as_f64().unwrap();
    assert!((mu - 2.0).abs() < 1e-10, "mu = {mu}");
    assert_eq!(doc["config"]["eps"], "0");
}

#[test]
fn compact_solve_reports_the_closing_boundary() {
    let out = krsol(&[&["solve"], F1, &["--compact"]].concat());
    assert_eq!(exit_code(&out), 0);
    let doc = stdout_json(&out);
    assert_eq!(doc["case"], "compact_shrinking");
    assert_eq!(doc["b1"].as_f64().unwrap(), 2.0);
    let mu = doc["mu"].as_f64().unwrap();
    assert!(mu > 0.5 && mu < 1.0, "mu = {mu}");
    assert!(doc["closing"].is_object());
    assert_eq!(doc["positivity"], true);
    let endpoint = doc["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "closing_endpoint")
        .expect("compact report carries the endpoint check");
    assert_eq!(endpoint["pass"], true, "endpoint: {endpoint}");
}

#[test]
fn verify_battery_is_clean_and_carries_controls() {
    let out = krsol(&[&["verify"], F1].concat());
    assert_eq!(exit_code(&out), 0);
    let doc = stdout_json(&out);
    let checks = doc["checks"].as_array().unwrap();
    let names: Vec<&str> = checks.iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"ode_residual_perturbed_control"));
    assert!(names.contains(&"q_reduction_control"));
    assert!(names.contains(&"finite_sum_identity_exact_sampled"));
    for check in checks {
        assert_eq!(check["pass"], true, "failing: {check}");
    }
    assert!(doc["residuals"]
        .as_array()
        .unwrap()
        .iter()
        .any(|r| r["name"] == "legendre_agreement_sampled"));
}

#[test]
fn quotient_matches_the_closed_form() {
    let out = krsol(&["quotient", "--a", "1", "--A", "3", "--B", "1"]);
    assert_eq!(exit_code(&out), 0);
    let doc = stdout_json(&out);
    let r = 13f64.sqrt();
    let expected = r + 3f64.ln() - (1.0 + r).ln() + 2f64.ln();
    let closed = doc["value_closed"].as_f64().unwrap();
    assert!((closed - expected).abs() < 1e-12, "closed = {closed}");
    assert_eq!(doc["pass"], true);

    // The norm wrappers route to the same coefficients.
    let wrapped = krsol(&["quotient", "--a", "1", "--u-norm2", "2", "--xi-norm2", "1"]);
    assert_eq!(exit_code(&wrapped), 0);
    let wdoc = stdout_json(&wrapped);
    assert_eq!(wdoc["value_closed"].as_f64().unwrap(), closed);
    assert_eq!(wdoc["A"].as_f64().unwrap(), 3.0);
}

#[test]
fn quotient_rejects_a_table_request() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(
        &path,
        r#"{"a": 1.0, "A": 3.0, "B": 1.0, "out_table": "t.csv"}"#,
    )
    .unwrap();
    let out = krsol(&["quotient", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn sweep_covers_the_steady_range() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("sweep.json");
    let table = dir.path().join("sweep.csv");
    let out = krsol(&[
        "sweep", "--d", "1", "--n", "1", "--tau", "1", "--eps", "1", "--mu-min", "-4",
        "--mu-max", "-0.25", "--steps", "16", "--out-report",
        report.to_str().unwrap(), "--out-table", table.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let doc = read_json(&report);
    assert_eq!(doc["case"], "steady");
    let summary = doc["summary"].as_array().unwrap();
    let entries = doc["entries"].as_array().unwrap();
    assert_eq!(summary.len(), 16);
    assert_eq!(entries.len(), 16);
    let mus: Vec<f64> = summary.iter().map(|r| r["mu"].as_f64().unwrap()).collect();
    assert!(mus.windows(2).all(|w| w[0] < w[1]), "mus not ascending: {mus:?}");
    assert_eq!(mus[0], -4.0);
    assert_eq!(mus[15], -0.25);
    for (row, entry) in summary.iter().zip(entries) {
        assert_eq!(row["positive"], true);
        assert_eq!(row["mu"], entry["mu"]);
        assert_eq!(entry["positivity"], true);
    }

    // The CSV table repeats the summary at full precision.
    let text = std::fs::read_to_string(&table).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "mu,c1_or_p,positive");
    for (line, row) in lines.zip(summary) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0].parse::<f64>().unwrap(), row["mu"].as_f64().unwrap());
        assert_eq!(
            fields[1].parse::<f64>().unwrap(),
            row["c1_or_p"].as_f64().unwrap()
        );
        assert_eq!(fields[2], "true");
    }
}

#[test]
fn sweep_single_step_collapses_to_one_entry() {
    let out = krsol(&[
        "sweep", "--d", "1", "--n", "2", "--tau", "1", "--eps", "1", "--mu-min", "-1.5",
        "--mu-max", "-0.5", "--steps", "1",
    ]);
    assert_eq!(exit_code(&out), 0);
    let doc = stdout_json(&out);
    assert_eq!(doc["case"], "expanding");
    assert_eq!(doc["entries"].as_array().unwrap().len(), 1);
    assert_eq!(doc["summary"][0]["mu"].as_f64().unwrap(), -1.5);
    // Expanding tails report the power-law exponent, which must be positive.
    assert!(doc["summary"][0]["c1_or_p"].as_f64().unwrap() > 0.0);
}

#[test]
fn sweep_rejects_bad_ranges_and_regimes() {
    // Range touching zero.
    let out = krsol(&[
        "sweep", "--d", "1", "--n", "1", "--tau", "1", "--eps", "1", "--mu-min", "-2",
        "--mu-max", "0", "--steps", "4",
    ]);
    assert_eq!(exit_code(&out), 2);
    // Shrinking geometry has no free constant to sweep.
    let out = krsol(&[
        "sweep", "--d", "1", "--n", "1", "--tau", "2", "--eps", "1", "--mu-min", "-2",
        "--mu-max", "-1", "--steps", "4",
    ]);
    assert_eq!(exit_code(&out), 2);
}
