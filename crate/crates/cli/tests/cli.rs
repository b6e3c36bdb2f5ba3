use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ep-atlas"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn malformed_config_exits_2_with_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"schema": 1, "hamiltonian": {"model": "kitaev"}, "scan": {"grid": [{"min": 0, "max": 1, "count": "x"}]}}"#);
    let out = run(&["scan", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/scan/grid/0/count"), "{err}");
    assert!(out.stdout.is_empty());

    let two = write(dir.path(), "two.json", r#"{"schema": 1, "hamiltonian": {"model": "kitaev", "entries": [["0"]]}}"#);
    assert_eq!(run(&["scan", "--config", &two, "--grid=0:1:3"]).status.code(), Some(2));
    assert_eq!(run(&["scan", "--model", "kitaev"]).status.code(), Some(2));
    assert_eq!(run(&["scan", "--model", "nope", "--grid=0:1:3"]).status.code(), Some(2));
}

#[test]
fn empty_region_has_no_candidates() {
    let out = run(&["scan", "--model", "kitaev", "--param", "gamma_l=1", "--param", "gamma_g=1", "--grid=-1:1:41"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["candidates"], Value::Array(vec![]));
    assert_eq!(v["schema"], 1);
}

#[test]
fn kitaev_bands_touch_at_ep() {
    let out = run(&["bands", "--config", &configs().join("kitaev_ep.json").to_string_lossy(), "--grid=-0.5:0.5:11"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let row = v["rows"].as_array().unwrap().iter().find(|r| r[0].as_f64().unwrap().abs() < 1e-15).unwrap();
    let (a, b) = ((row[1].as_f64().unwrap(), row[2].as_f64().unwrap()), (row[3].as_f64().unwrap(), row[4].as_f64().unwrap()));
    assert!(((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt() < 1e-8);
}

#[test]
fn hermitian_bands_are_real_and_csv_matches_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "herm.json",
        r#"{"schema": 1,
            "hamiltonian": {"family": "Pauli", "coefficients": ["sin(k_x)", "cos(k_x)", "m"], "params": {"m": 0.4}},
            "scan": {"grid": [{"min": -3, "max": 3, "count": 31}]},
            "outputs": [
              {"kind": "bands", "path": "BANDS_CSV", "format": "csv"},
              {"kind": "bands", "path": "BANDS_JSON"},
              {"kind": "constraints", "path": "CONS_CSV", "format": "csv"}
            ]}"#
        .replace("BANDS_CSV", &dir.path().join("b.csv").to_string_lossy())
        .replace("BANDS_JSON", &dir.path().join("b.json").to_string_lossy())
        .replace("CONS_CSV", &dir.path().join("c.csv").to_string_lossy())
        .as_str(),
    );
    let out = run(&["bands", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let csv = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    let json: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("b.json")).unwrap()).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "k_x,re_1,im_1,re_2,im_2");
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 31);
    for (line, row) in lines.zip(rows) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let js: Vec<f64> = row.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert_eq!(cells, js);
        assert!(cells[2].abs() < 1e-14 && cells[4].abs() < 1e-14);
    }
    let cons = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert!(cons.starts_with("k_x,re_det,im_det\n"));
}

#[test]
fn tablecheck_examples() {
    let out = run(&["tablecheck", "--n", "2", "--kind", "psH+CS"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let row = &v["rows"][0];
    assert_eq!(row["observed_constraints"], 1);
    assert_eq!(row["observed_labels"], serde_json::json!(["dxR", "dzI"]));

    let out = run(&["tablecheck", "--n", "3", "--kind", "SLS"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let pat = &v["patterns"][0];
    assert!(pat["observed_vanishing"].as_array().unwrap().iter().any(|q| q.as_str().unwrap().contains("det H")));
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS"));

    let out = run(&["tablecheck", "--n", "3", "--kind", "CS"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["skipped"].as_array().unwrap().len(), 1);

    assert_eq!(run(&["tablecheck", "--kind", "bogus"]).status.code(), Some(2));
}

#[test]
fn symcheck_flags_broken_symmetry() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.json",
        r#"{"schema": 1,
            "hamiltonian": {"model": "threefold_alpha"},
            "symmetries": [{"kind": "psCS", "generator": "identity3"}, {"kind": "SLS", "generator": [[1, 0, 0], [0, -1, 0], [0, 0, 1]]}]}"#,
    );
    let out = run(&["symcheck", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["results"][0]["pass"], true);
    assert_eq!(v["results"][1]["pass"], false);
}

#[test]
fn classify_reports_label_and_exponent() {
    let out = run(&["classify", "--config", &configs().join("threefold_ep3.json").to_string_lossy()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let r = &v["results"][0];
    assert_eq!(r["classification"]["label"], "EP3-I");
    assert!((r["scaling"]["leading_exponent"].as_f64().unwrap() - 0.5).abs() < 0.05);

    // not an EP: explicit k that is not degenerate
    let out = run(&["classify", "--model", "kitaev", "--config", &configs().join("kitaev_ep.json").to_string_lossy(), "--param", "mu=0.1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn thread_count_is_validated() {
    let out = bin().args(["tablecheck", "--n", "2", "--kind", "psH"]).env("EP_ATLAS_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
