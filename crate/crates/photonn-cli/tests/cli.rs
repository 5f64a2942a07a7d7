//! End-to-end tests of the `photonn` binary: artifact layout, reproducibility,
//! config layering, and the documented exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_photonn"))
}

/// Fresh scratch directory per test.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("photonn-cli-{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn perf_table_reproduces_reference_cells() {
    let dir = scratch("perf");
    run_ok(bin().args(["perf-table", "--out-dir", dir.to_str().unwrap()]));
    let table = read(&dir.join("perf_table.csv"));
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "N,L,power_W,latency_s,footprint_m2,speed_mac_s,efficiency_J_mac"
    );
    let n4: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(n4[0], "4");
    assert_eq!(n4[2].parse::<f64>().unwrap(), 0.4);
    assert!((n4[3].parse::<f64>().unwrap() - 125e-12).abs() < 1e-12);
    assert_eq!(n4[5].parse::<f64>().unwrap(), 1.6e11);
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(dir.join("resolved_config.json").exists());
}

#[test]
fn same_seed_reruns_are_byte_identical() {
    let dir = scratch("repro");
    let args = [
        "train-xor",
        "--epochs",
        "40",
        "--seed",
        "3",
        "--out-dir",
        dir.to_str().unwrap(),
    ];
    run_ok(bin().args(args));
    let files = [
        "history.csv",
        "learned_io.csv",
        "model.json",
        "resolved_config.json",
    ];
    let first: Vec<String> = files.iter().map(|f| read(&dir.join(f))).collect();
    run_ok(bin().args(args));
    for (f, before) in files.iter().zip(&first) {
        assert_eq!(&read(&dir.join(f)), before, "{f} changed between reruns");
    }
}

#[test]
fn different_seeds_give_different_models() {
    let a = scratch("seed-a");
    let b = scratch("seed-b");
    run_ok(bin().args([
        "train-xor",
        "--epochs",
        "5",
        "--seed",
        "0",
        "--out-dir",
        a.to_str().unwrap(),
    ]));
    run_ok(bin().args([
        "train-xor",
        "--epochs",
        "5",
        "--seed",
        "1",
        "--out-dir",
        b.to_str().unwrap(),
    ]));
    assert_ne!(read(&a.join("model.json")), read(&b.join("model.json")));
}

#[test]
fn usage_errors_exit_1() {
    let out = bin().arg("--definitely-not-a-flag").output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let dir = scratch("badcfg");
    let cfg = dir.join("bad.toml");
    std::fs::write(&cfg, "[train-xor]\nepochz = 3\n").unwrap();
    let out = bin()
        .args([
            "train-xor",
            "--config",
            cfg.to_str().unwrap(),
            "--out-dir",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("epochz"), "stderr should name the bad key: {stderr}");
}

#[test]
fn missing_data_exits_2_and_names_files() {
    let dir = scratch("nodata");
    let out = bin()
        .args([
            "train-mnist",
            "--data-dir",
            "/nonexistent-mnist",
            "--out-dir",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("train-images-idx3-ubyte"),
        "diagnostic should name the expected files: {stderr}"
    );
}

#[test]
fn check_failure_exits_3() {
    let dir = scratch("check");
    let out = bin()
        .args([
            "train-xor",
            "--epochs",
            "2",
            "--check",
            "--out-dir",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn flags_override_config_file() {
    let dir = scratch("layering");
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, "seed = 9\n[train-xor]\nepochs = 5\nstep_size = 0.02\n").unwrap();
    run_ok(bin().args([
        "train-xor",
        "--config",
        cfg.to_str().unwrap(),
        "--epochs",
        "7",
        "--out-dir",
        dir.to_str().unwrap(),
    ]));
    let resolved = read(&dir.join("resolved_config.json"));
    assert!(resolved.contains("\"epochs\": 7"), "flag wins: {resolved}");
    assert!(resolved.contains("\"step_size\": 0.02"), "file beats default");
    assert!(resolved.contains("\"seed\": 9"), "root seed honored");
    let history = read(&dir.join("history.csv"));
    assert_eq!(history.lines().count(), 8, "header + 7 epochs");
}

#[test]
fn activation_curve_matches_expected_shape() {
    let dir = scratch("curve");
    run_ok(bin().args([
        "activation-curve",
        "--points",
        "201",
        "--out-dir",
        dir.to_str().unwrap(),
    ]));
    let csv = read(&dir.join("activation_curve.csv"));
    let mut rows_pi = Vec::new();
    for line in csv.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        if cols[0] == 1.0 {
            rows_pi.push(cols);
        }
    }
    assert_eq!(rows_pi.len(), 201);
    // At φ_b = π the zero-power transmission vanishes (ReLU-like response)…
    assert!(rows_pi[0][4].abs() < 1e-12);
    // …and the transmission ceiling is 1 − α = 0.9, reached on this grid.
    let t_max = rows_pi.iter().map(|r| r[4]).fold(0.0, f64::max);
    assert!(t_max <= 0.9 + 1e-12);
    assert!(t_max > 0.89, "grid should approach the 0.9 ceiling, got {t_max}");
}

#[test]
fn kerr_compare_reference_levels() {
    let dir = scratch("kerr");
    run_ok(bin().args([
        "kerr-compare",
        "--gain-min",
        "100",
        "--gain-max",
        "1000000",
        "--points",
        "3",
        "--out-dir",
        dir.to_str().unwrap(),
    ]));
    let csv = read(&dir.join("kerr_compare.csv"));
    let first: Vec<f64> = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    // G = 100 V/A: Γ_EO = π·α·R·G/V_πL = π·0.1·100/0.02 = 500π for α = 0.1.
    assert!((first[3] - 500.0 * std::f64::consts::PI).abs() < 1e-9);
    // Kerr reference for the default silicon waveguide parameters.
    assert!((first[5] - 364.8301).abs() < 1e-3);
}

#[test]
fn threshold_contour_scales_linearly_in_v_pi() {
    let dir = scratch("contour");
    run_ok(bin().args([
        "threshold-contour",
        "--target-pth-mw",
        "0.1",
        "--v-pi-min",
        "2",
        "--v-pi-max",
        "8",
        "--v-pi-points",
        "2",
        "--out-dir",
        dir.to_str().unwrap(),
    ]));
    let csv = read(&dir.join("threshold_contour.csv"));
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    // Fixed φ_b = π and threshold power ⇒ required gain is proportional to V_π.
    let ratio = rows[1][2] / rows[0][2];
    assert!((ratio - 4.0).abs() < 1e-6, "gain should scale ×4, got ×{ratio}");
}
