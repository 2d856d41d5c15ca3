use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hstirap(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hstirap"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn synthesize_reports_settings() {
    let dir = tempfile::tempdir().unwrap();
    let o = hstirap(&["synthesize", "0.6", "0", "0", "0.48", "0.64", "0"], dir.path());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["analytic_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(v["settings"]["stirap_halfarea"].as_f64().unwrap() >= 14.0 * std::f64::consts::PI);
}

#[test]
fn synthesize_rejects_bad_targets() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!hstirap(&["synthesize", "1", "0", "1", "0", "0", "0"], dir.path()).status.success());
    assert!(!hstirap(&["synthesize", "--spherical", "1", "0", "1", "0", "0", "0"], dir.path()).status.success());
}

#[test]
fn emitted_config_simulates_to_target() {
    let dir = tempfile::tempdir().unwrap();
    let o = hstirap(&["synthesize", "--spherical", "0.9", "0.6", "0.3", "-1.2", "--emit-config"], dir.path());
    assert!(o.status.success());
    fs::write(dir.path().join("target.toml"), stdout(&o)).unwrap();
    let o = hstirap(&["simulate", "target.toml", "--out", "res"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("res/target.csv")).unwrap();
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    // pop2 = cos²ε
    let pop2 = last[last.len() - 1];
    assert!((pop2 - 0.9f64.cos().powi(2)).abs() < 0.01, "{pop2}");
    let manifest = fs::read_to_string(dir.path().join("res/target.manifest.json")).unwrap();
    assert!(manifest.contains("content_sha256"));
}

#[test]
fn analytic_figure_writes_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let o = hstirap(&["figure", "fig4", "--analytic", "--out", "figs"], dir.path());
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("figs/fig4.csv")).unwrap();
    assert_eq!(csv.lines().count(), 64 * 64 + 1);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("figs/fig4.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["complete"], true);
    assert!(!hstirap(&["figure", "fig7"], dir.path()).status.success());
}

#[test]
fn sweep_spec_from_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("scan.toml"),
        r#"
        name = "scan"
        outputs = ["populations", "arg_ab"]
        [[axes]]
        path = "sequence.ts_over_sigma"
        linspace = [1.0, 3.0, 4]
        "#,
    )
    .unwrap();
    let o = hstirap(&["sweep", "scan.toml", "--jobs", "2", "--out", "o"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("o/scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("index,i0,sequence.ts_over_sigma,pop0,pop1,pop2,arg_ab"));

    fs::write(dir.path().join("bad.toml"), "name = \"b\"\noutputs = [\"nu\"]\n[[axes]]\npath = \"sequence.zzz\"\nvalues = [1.0]\n").unwrap();
    assert!(!hstirap(&["sweep", "bad.toml", "--out", "o"], dir.path()).status.success());
}

#[test]
fn ancilla_sweep_csv() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.toml"), "points = 8\n").unwrap();
    let o = hstirap(&["ancilla-sweep", "a.toml"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("phi_sum,P_a_analytic,P_a_numeric"));
    assert_eq!(out.lines().count(), 9);
    assert!(!out.contains("undefined"));
}

#[test]
fn acceptance_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = hstirap(&["acceptance", "--only", "2"], dir.path());
    assert!(ok.status.success());
    assert!(stdout(&ok).starts_with("PASS [02]"));
    let bad = hstirap(&["acceptance", "--only", "99"], dir.path());
    assert!(!bad.status.success());
    assert!(stdout(&bad).starts_with("FAIL [99]"));
}
