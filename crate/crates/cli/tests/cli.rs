use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn tmg(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmg"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("run tmg")
}

fn csv_rows(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

#[test]
fn analyze_default_grid() {
    let dir = TempDir::new().unwrap();
    let out = tmg(&["analyze", "--pt", "0", "--nu", "1"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv_rows(&dir.path().join("analyze.csv"));
    assert_eq!(header, "tau,p_t,nu1,nu2,omega,alpha,rho_theory,theta_max,mu_s");
    assert_eq!(rows.len(), 49);
    let unit = rows.iter().find(|r| r[0] == "1.0").unwrap();
    assert!((unit[6].parse::<f64>().unwrap() - 0.2).abs() < 1e-12);
}

#[test]
fn analyze_json_and_empty_range() {
    let dir = TempDir::new().unwrap();
    let out = tmg(&["analyze", "--pt", "0,1", "--tau", "2", "--format", "json"], dir.path());
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("analyze.json")).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    let out = tmg(&["analyze", "--tau-min", "10", "--tau-max", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"pt": 1, "tau-min": 0.1, "tau-max": 10, "points": 5}"#).unwrap();
    let out = tmg(&["analyze", "--config", cfg.to_str().unwrap(), "--points", "3"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = csv_rows(&dir.path().join("analyze.csv"));
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[1] == "1"));

    fs::write(&cfg, r#"{"pt": 1, "colour": "blue"}"#).unwrap();
    let out = tmg(&["analyze", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_suites() {
    let dir = TempDir::new().unwrap();
    for suite in ["symbols", "order", "smoothing"] {
        let out = tmg(&["verify", suite], dir.path());
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert!(out.status.success(), "{suite}: {stdout}");
        assert!(stdout.contains("PASS") && !stdout.contains("FAIL"));
    }
    let (header, rows) = csv_rows(&dir.path().join("verify-symbols.csv"));
    assert_eq!(header, "suite,check,p_t,tau,nu,value,tolerance,pass");
    assert_eq!(rows.len(), 45);
}

#[test]
fn verify_rho_constants() {
    let dir = TempDir::new().unwrap();
    let out = tmg(&["verify", "rho", "--steps", "256"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let (_, rows) = csv_rows(&dir.path().join("verify-rho.csv"));
    assert_eq!(rows.len(), 16);
}

#[test]
fn verify_failure_names_the_case() {
    let dir = TempDir::new().unwrap();
    // a fixed damping of 1.9 makes the cycles blow up at small steps
    let out = tmg(&["verify", "rho", "--steps", "64", "--omega", "1.9", "--nu", "1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("p_t=0") && stderr.contains("nu="), "{stderr}");
}

#[test]
fn solve_outputs_and_exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = tmg(&["solve", "--steps", "128", "--eps", "1e-12", "--compare-sequential"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("max deviation from forward substitution"));
    assert!(stdout.contains("measured convergence factor"));
    let stats: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("stats.json")).unwrap()).unwrap();
    let endpoint = stats["endpoint"].as_f64().unwrap();
    assert!((endpoint - (1.0f64 + 1.0 / 128.0).powi(-128)).abs() < 1e-10);
    let (header, rows) = csv_rows(&dir.path().join("solution.csv"));
    assert_eq!(header, "step,t_start,t_end,c0,u_end");
    assert_eq!(rows.len(), 128);
    let (header, _) = csv_rows(&dir.path().join("residuals.csv"));
    assert_eq!(header, "iteration,residual");

    let dir = TempDir::new().unwrap();
    let out = tmg(&["solve", "--steps", "64", "--max-iters", "1", "--eps", "1e-12"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(dir.path().join("stats.json").exists());

    let out = tmg(&["solve", "--no-such-flag"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_tables() {
    let dir = TempDir::new().unwrap();
    let out = tmg(&["bench", "--mode", "strong", "--workers", "1,2,4", "--steps", "1024"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv_rows(&dir.path().join("bench-strong.csv"));
    assert_eq!(header, "mode,p_t,workers,steps,median_seconds,speedup,time_ratio,iterations,samples");
    assert_eq!(rows.len(), 3);

    let out = tmg(&["bench", "--mode", "weak", "--workers", "1,2", "--steps", "256"], dir.path());
    assert!(out.status.success());
    let (header, rows) = csv_rows(&dir.path().join("bench-weak.csv"));
    assert!(header.contains("time_ratio"));
    assert_eq!(rows.len(), 2);

    let out = tmg(&["bench", "--reps", "2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
