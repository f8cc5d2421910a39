use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn warpcone() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_warpcone"));
    cmd.env_remove("WARPCONE_OUTPUT_DIR");
    cmd
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn empty_scenario_gives_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("empty.toml");
    std::fs::write(&config, "").unwrap();
    let out = run(warpcone().args(["scenario", "--config"]).arg(&config).arg("--output").arg(dir.path().join("out")));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(&dir.path().join("out"), "report.json"), r#"{"operations":[]}"#);
}

#[test]
fn fix_b_suite_passes_and_is_byte_stable() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let out = run(warpcone().args(["scenario", "--config"]).arg(scenario("fix-b.toml")).arg("--output").arg(dir.path()));
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let first = read(dirs[0].path(), "report.json");
    assert_eq!(first, read(dirs[1].path(), "report.json"));
    let report: Value = serde_json::from_str(&first).unwrap();
    let ops: Vec<&str> = report["operations"].as_array().unwrap().iter().map(|r| r["op"].as_str().unwrap()).collect();
    assert_eq!(ops, ["slice", "box", "spectral", "embed-box", "embed-cone", "hr"]);
    for rec in report["operations"].as_array().unwrap() {
        assert_eq!(rec["status"], "passed", "{}", rec["op"]);
        assert_eq!(rec["schema_version"], 1);
    }
    let slices = report["operations"][0]["result"]["slices"].as_array().unwrap();
    assert!(slices.iter().all(|s| s["closed_form_equals_dijkstra"] == true && s["sandwich_ok"] == true));
    let scales: Vec<&str> = report["operations"][1]["result"]["levels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| l["section_scale"]["s"].as_str().unwrap())
        .collect();
    assert_eq!(scales, ["1/1", "8/1", "208/1"]);
    let spectra = read(dirs[0].path(), "02-spectral-spectra.csv");
    assert_eq!(spectra.lines().next(), Some("n,order,lambda2,cheeger_lo,cheeger_hi"));
    assert_eq!(spectra.lines().count(), 4);
    let profile = read(dirs[0].path(), "03-embed-box-profile.csv");
    assert_eq!(profile.lines().next(), Some("r,rho_minus,rho_plus"));
    let radii: Vec<f64> = profile.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(!radii.is_empty() && radii.windows(2).all(|w| w[0] < w[1]));
    let manifest: Value = serde_json::from_str(&read(dirs[0].path(), "manifest.json")).unwrap();
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["partial"], false);
}

#[test]
fn fix_d_divergence_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(warpcone().args(["warp", "--fixture", "FIX-D", "--window", "8", "--format", "csv", "--output"]).arg(dir.path()));
    assert!(out.status.success());
    assert!(!dir.path().join("report.json").exists());
    let table = read(dir.path(), "00-warp-divergence.csv");
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("n,d_gamma,delta_gamma"));
    for (n, line) in (1..=6).zip(lines) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[0], n.to_string());
        // Δ = min(2^n + 1 − 2^−n, 1 + n) is 1 + n throughout this range.
        assert_eq!(cells[2], format!("{}/1", 1 + n));
        assert_eq!(cells[1], format!("{}/{}", (1 << (n + 1)) - 1, 1 << n));
    }
}

#[test]
fn env_var_sets_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(warpcone().args(["box", "--fixture", "FIX-B"]).env("WARPCONE_OUTPUT_DIR", dir.path()));
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(read(dir.path(), "00-box-box.csv").starts_with("n,order,diameter,weight,section_scale,passed"));
}

#[test]
fn stdout_report_without_output_dir() {
    let out = run(warpcone().args(["warp", "--fixture", "FIX-A", "--scale", "2", "--one-step"]));
    assert!(out.status.success());
    let report = stdout_json(&out);
    let rec = &report["operations"][0];
    assert_eq!(rec["fixture"], "FIX-A");
    assert_eq!(rec["params"]["scale"], "2/1");
    assert_eq!(rec["result"]["one_step"]["sandwich_ok"], true);
    // Rotations of the 8-cycle are isometries: d_Γ at s = 2 is the cycle metric.
    assert_eq!(rec["result"]["distances"][0][4], "4/1");
}

#[test]
fn float_mode_renders_numbers() {
    let out = run(warpcone().args(["warp", "--fixture", "FIX-A", "--scale", "1/2", "--float", "--tol", "1e-12"]));
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert_eq!(report["operations"][0]["result"]["distances"][0][1], 0.5);
    assert_eq!(report["operations"][0]["params"]["scale"], 0.5);
}

#[test]
fn unwritable_output_keeps_report() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = run(warpcone().args(["box", "--fixture", "FIX-B", "--output"]).arg(blocker.join("sub")));
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["operations"][0]["status"], "passed");
}

#[test]
fn cap_exceeded_marks_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("capped.toml");
    std::fs::write(&config, "[fixture]\nname = \"FIX-B\"\n[caps]\nmax_points = 10\n[[operations]]\nop = \"box\"\n").unwrap();
    let out = run(warpcone().args(["scenario", "--config"]).arg(&config).arg("--output").arg(dir.path().join("out")));
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_str(&read(&dir.path().join("out"), "report.json")).unwrap();
    assert_eq!(report["operations"][0]["status"], "truncated");
    assert!(report["operations"][0]["message"].as_str().unwrap().contains("27 points"));
    let manifest: Value = serde_json::from_str(&read(&dir.path().join("out"), "manifest.json")).unwrap();
    assert_eq!(manifest["partial"], true);
}

#[test]
fn stabilizer_reports_common_elements() {
    let out = run(warpcone().args(["stabilizer", "--coprime", "2,3", "--power", "2", "--radius", "6"]));
    assert!(out.status.success());
    let result = &stdout_json(&out)["operations"][0]["result"];
    assert_eq!(result["all_agree"], true);
    assert_eq!(result["nested"], true);
    assert_eq!(result["common_nontrivial"][0][0]["entries"], serde_json::json!([1, 0, 4, 1]));
}

#[test]
fn orbit_exports_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(warpcone().args(["orbit", "--fixture", "FIX-C", "--output"]).arg(dir.path()));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let edges = dir.path().join("00-orbit-orbit-graph.edges");
    let out = run(warpcone().args(["spectral", "--edges"]).arg(&edges));
    assert!(out.status.success());
    let spec = &stdout_json(&out)["operations"][0]["result"];
    assert_eq!(spec["vertices"], 24);
}

#[test]
fn custom_system_and_bad_input() {
    let out = run(warpcone().args(["scenario", "--config"]).arg(scenario("custom.toml")));
    assert!(out.status.success());
    let out = run(warpcone().args(["warp", "--fixture", "FIX-Z"]));
    assert_eq!(out.status.code(), Some(2));
    let out = run(warpcone().args(["scenario"]));
    assert_eq!(out.status.code(), Some(2));
    let out = run(warpcone().args(["slice", "--fixture", "FIX-A"]));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["operations"][0]["status"], "error");
}

#[test]
fn scenario_files_all_pass() {
    for name in ["fix-a.toml", "fix-c.toml", "fix-d.toml"] {
        let dir = tempfile::tempdir().unwrap();
        let out = run(warpcone().args(["scenario", "--config"]).arg(scenario(name)).arg("--output").arg(dir.path()));
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
