use std::path::Path;
use std::process::{Command, Output};

fn zerobias(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zerobias")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

/// Rows of a CSV file as header-keyed string maps.
fn read_rows(path: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let headers = rdr.headers().unwrap().clone();
    rdr.records()
        .map(|r| headers.iter().map(str::to_owned).zip(r.unwrap().iter().map(str::to_owned)).collect())
        .collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn smoke_expand_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "smoke.json",
        r#"{"n_grid": [16], "order": 0, "function": {"name": "call", "k": 0.0}}"#,
    );
    let out = dir.path().join("out");
    let o = zerobias(&["expand", "--config", &cfg, "--quiet", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty(), "--quiet printed output");
    for f in ["expand.csv", "expand_report.json"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let rows = read_rows(&out.join("expand.csv"));
    assert_eq!(rows.len(), 1);
    let c0: f64 = rows[0]["c_0"].parse().unwrap();
    let oracle: f64 = rows[0]["oracle"].parse().unwrap();
    let err: f64 = rows[0]["error_0"].parse().unwrap();
    let budget: f64 = rows[0]["budget"].parse().unwrap();
    assert!((c0 - 0.4 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-9);
    assert!((err - (oracle - c0).abs()).abs() < 1e-12);
    assert!(err <= budget);

    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("expand_report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["config"]["n_grid"], serde_json::json!([16]));
}

#[test]
fn report_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let o = zerobias(&["expand", "--n-grid", "16,32", "--order", "1", "--seed", "9", "--quiet", "--out", first.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(first.join("expand_report.json")).unwrap()).unwrap();
    let mut embedded = report["config"].clone();
    let second = dir.path().join("second");
    embedded["out"] = serde_json::json!(second.to_str().unwrap());
    let cfg = write_config(dir.path(), "embedded.json", &embedded.to_string());
    let o = zerobias(&["expand", "--config", &cfg, "--quiet"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(first.join("expand.csv")).unwrap(), std::fs::read(second.join("expand.csv")).unwrap());
}

#[test]
fn insufficient_moments_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "limit.json", r#"{"moment_limit": 2.5, "order": 1, "n_grid": [16]}"#);
    let o = zerobias(&["expand", "--config", &cfg, "--quiet", "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("order 3"), "{msg}");
}

#[test]
fn malformed_config_names_the_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", "{\n  \"order\": 1,\n  \"function\": {\"name\": \"sine\"}\n}\n");
    let o = zerobias(&["expand", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("line 3"), "{msg}");
    assert!(msg.contains("bad.json"), "{msg}");

    let cfg = write_config(dir.path(), "typo.json", r#"{"ordr": 1}"#);
    let o = zerobias(&["expand", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ordr"), "{}", stderr(&o));
}

#[test]
fn verify_passes_and_catches_an_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("verify");
    let o = zerobias(&["verify", "--quiet", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_rows(&out.join("verify.csv"));
    assert!(rows.len() > 50);
    assert!(rows.iter().all(|r| r["passed"] == "true"));

    let o = zerobias(&["verify", "--quiet", "--fault", "stein-perturbation", "--out", dir.path().join("fault").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let rows = read_rows(&dir.path().join("fault/verify.csv"));
    assert!(rows.iter().any(|r| r["group"] == "stein" && r["passed"] == "false"));
}

#[test]
fn verify_filters_by_group() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lambda");
    let o = zerobias(&["verify", "--check", "lambda", "--quiet", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_rows(&out.join("verify.csv"));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r["group"] == "lambda"));
}

#[test]
fn concentration_has_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("conc");
    let o = zerobias(&["concentration", "--quiet", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_rows(&out.join("concentration.csv"));
    assert!(rows.len() > 1000);
    assert!(rows.iter().all(|r| r["violations"] == "0"));
    let kinds: std::collections::HashSet<_> = rows.iter().map(|r| r["kind"].clone()).collect();
    assert_eq!(kinds.len(), 3);
}

#[test]
fn order_fit_recovers_first_order_slope() {
    // Default grid, 16 to 1024 in doublings. Shorter grids are dominated by
    // the lattice oscillation of the two-point sum.
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit");
    let o = zerobias(&["order-fit", "--quiet", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fits = read_rows(&out.join("order_fit.csv"));
    let e1 = fits.iter().find(|r| r["series"] == "error_1").unwrap();
    let slope: f64 = e1["slope"].parse().unwrap();
    assert!((-1.2..=-0.8).contains(&slope), "slope {slope}");
}

#[test]
fn symmetric_family_marks_correction_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sym.json",
        r#"{"distribution": {"kind": "two-point", "p": 0.5}, "n_grid": [16, 32, 64, 128]}"#,
    );
    let out = dir.path().join("sym");
    let o = zerobias(&["order-fit", "--config", &cfg, "--quiet", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fits = read_rows(&out.join("order_fit.csv"));
    let corr = fits.iter().find(|r| r["series"] == "correction").unwrap();
    assert_eq!(corr["degenerate"], "true");
}

#[test]
fn order_fit_needs_enough_points() {
    let o = zerobias(&["order-fit", "--n-grid", "16,32", "--quiet", "--out", "/nonexistent/never"]);
    assert_eq!(o.status.code(), Some(2));
}
