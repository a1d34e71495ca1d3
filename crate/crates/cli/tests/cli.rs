use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn uwacap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uwacap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn solve_json(args: &[&str]) -> Value {
    let o = uwacap(args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn psd_prints_components() {
    let o = uwacap(&["psd", "--freq", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("# schema=uwacap.psd/1"));
    let turb = out.lines().find(|l| l.starts_with("turbulence")).unwrap();
    let db: f64 = turb.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((db - 17.0).abs() < 1e-9);
    assert!(out.lines().any(|l| l.starts_with("total")));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(uwacap(&["psd", "--freq", "0"]).status.code(), Some(1));
    assert_eq!(uwacap(&["psd", "--freq", "-3"]).status.code(), Some(1));
    assert_eq!(uwacap(&["solve", "--l", "-1", "--c", "1"]).status.code(), Some(1));
    assert_eq!(uwacap(&["solve", "--l", "1", "--c", "1", "--s", "2"]).status.code(), Some(1));
    assert_eq!(uwacap(&["nope"]).status.code(), Some(1));
    assert_eq!(uwacap(&["--help"]).status.code(), Some(0));
}

#[test]
fn unreachable_capacity_exits_two() {
    assert_eq!(uwacap(&["solve", "--l", "5", "--c", "1e9"]).status.code(), Some(2));
}

#[test]
fn zero_capacity_is_empty_band() {
    let v = solve_json(&["solve", "--l", "3", "--c", "0"]);
    assert_eq!(v["power_linear"].as_f64(), Some(0.0));
    assert_eq!(v["band"].as_array().map(Vec::len), Some(0));
    assert_eq!(v["schema"], "uwacap.solution/1");
}

#[test]
fn solve_is_reproducible() {
    let a = uwacap(&["solve", "--l", "7", "--c", "1.5"]);
    let b = uwacap(&["solve", "--l", "7", "--c", "1.5"]);
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    let c = v["capacity_achieved"].as_f64().unwrap();
    assert!((c - 1.5).abs() < 1e-9);
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn spreading_factor_scales_power_only() {
    let a = solve_json(&["solve", "--l", "5", "--c", "1", "--k", "1.5"]);
    let b = solve_json(&["solve", "--l", "5", "--c", "1", "--k", "2"]);
    let ratio = b["power_linear"].as_f64().unwrap() / a["power_linear"].as_f64().unwrap();
    assert!((ratio / 5f64.sqrt() - 1.0).abs() < 1e-6, "ratio {ratio}");
    for key in ["f_ini", "f_end"] {
        let (x, y) = (a[key].as_f64().unwrap(), b[key].as_f64().unwrap());
        assert!((x - y).abs() < 1e-9 * x, "{key}");
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"env": {"spreading_factor": 2.0, "shipping": 0.5, "wind_speed": 0}}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = solve_json(&["solve", "--l", "5", "--c", "1", "--config", cfg]);
    let flag = solve_json(&["solve", "--l", "5", "--c", "1", "--k", "2"]);
    assert_eq!(from_file["power_linear"], flag["power_linear"]);
    let over = solve_json(&["solve", "--l", "5", "--c", "1", "--config", cfg, "--k", "1.5"]);
    let plain = solve_json(&["solve", "--l", "5", "--c", "1"]);
    assert_eq!(over["power_linear"], plain["power_linear"]);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"bogus": true}"#).unwrap();
    let o = uwacap(&["solve", "--l", "5", "--c", "1", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

fn sweep(out: &Path, extra: &[&str]) {
    let mut args = vec!["sweep", "--points", "8", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = uwacap(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sweep_is_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    sweep(&a, &["--case", "case2"]);
    sweep(&b, &["--case", "case2"]);
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# schema=uwacap.sweep/1 case=case2"));
    assert_eq!(lines.next().unwrap(), "l_km,C_kbps,P_dB,f_ini_kHz,f_end_kHz,B_kHz,K_dB,f0_kHz");
    assert_eq!(lines.count(), 64);
}

#[test]
fn sweep_needs_a_case() {
    let dir = tempfile::tempdir().unwrap();
    let o = uwacap(&["sweep", "--out", dir.path().join("x.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fit_rejects_missing_column() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    sweep(&csv, &["--case", "case1"]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, text.replace("B_kHz", "Bw")).unwrap();
    let o = uwacap(&["fit", "--input", bad.to_str().unwrap(), "--quantity", "B"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));

    let out = dir.path().join("fit");
    let o = uwacap(&[
        "fit",
        "--input",
        csv.to_str().unwrap(),
        "--quantity",
        "P",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("coeffs_case1_P.csv").exists());
    assert!(out.join("plot_case1_P.csv").exists());
}

#[test]
fn report_writes_tables_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let sweeps = dir.path().join("sweeps");
    sweep(&sweeps.join("c1.csv"), &["--case", "case1", "--l-ref-km", "0.001"]);
    sweep(&sweeps.join("c2.csv"), &["--case", "case2"]);
    let out = dir.path().join("report");
    let o = uwacap(&["report", "--sweeps", sweeps.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for i in 1..=6 {
        let found = std::fs::read_dir(&out)
            .unwrap()
            .filter_map(|e| e.ok())
            .any(|e| e.file_name().to_string_lossy().starts_with(&format!("table{i}_")));
        assert!(found, "table{i} missing");
    }
    for q in ["P", "fend", "B"] {
        assert!(out.join(format!("plot_case1_{q}.csv")).exists());
    }
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let hash = manifest["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(stdout(&o).contains(hash));

    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let o = uwacap(&["report", "--sweeps", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}
