//! End-to-end checks of the binary: exit codes, artifact files, determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_steklov"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("steklov-cli-test-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn list_files(dir: &Path) -> Vec<String> {
    match fs::read_dir(dir) {
        Ok(entries) => {
            let mut names: Vec<String> = entries
                .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
                .collect();
            names.sort();
            names
        }
        Err(_) => Vec::new(),
    }
}

#[test]
fn unknown_experiment_exits_2_without_files() {
    let out = temp_dir("unknown");
    let status = bin()
        .args([
            "run",
            &format!("out={}", out.display()),
            "experiment=frobnicate",
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(list_files(&out).is_empty(), "no files should be written");

    let status = bin().arg("frobnicate").output().unwrap();
    assert_eq!(status.status.code(), Some(2));
}

#[test]
fn spectrum_run_writes_expected_values() {
    let out = temp_dir("spectrum");
    let status = bin()
        .args([
            "solve",
            "q=0",
            "target_h=0.1",
            "count=6",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(
        status.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    assert_eq!(list_files(&out), vec!["spectrum.csv", "spectrum.json"]);
    let csv = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    let values: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let target = [0.0, 1.0, 1.0, 2.0, 2.0, 3.0];
    for (v, t) in values.iter().zip(target.iter()) {
        assert!((v - t).abs() <= 0.05 * (1.0 + t), "{v} vs {t}");
    }
    let json = fs::read_to_string(out.join("spectrum.json")).unwrap();
    assert!(json.contains("\"kind\":\"steklov\""));
}

#[test]
fn identical_configs_produce_identical_bytes() {
    let out_a = temp_dir("det-a");
    let out_b = temp_dir("det-b");
    let cfg = temp_dir("det-cfg").with_extension("cfg");
    fs::write(
        &cfg,
        "experiment = nodal-sweep\nq = -1.0\ntarget_h = 0.15\nk_max = 6\n",
    )
    .unwrap();
    for out in [&out_a, &out_b] {
        let status = bin()
            .args([
                "run",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_eq!(status.status.code(), Some(0));
    }
    for name in ["nodal.csv", "nodal_summary.json"] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn config_file_with_overrides() {
    let out = temp_dir("override");
    let cfg = temp_dir("override-cfg").with_extension("cfg");
    fs::write(
        &cfg,
        "experiment = btilde\nq = -1.0\ntarget_h = 0.1\ncount = 20\n",
    )
    .unwrap();
    // Override count down on the command line.
    let status = bin()
        .args([
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "count=8",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(
        status.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    let csv = fs::read_to_string(out.join("btilde.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9, "expected 8 data rows");
}

#[test]
fn keyexample_radial_ground_state() {
    let out = temp_dir("keyexample");
    let status = bin()
        .args([
            "keyexample",
            "n=0",
            "eps=0.1",
            "target_h=0.08",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(
        status.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    let json = fs::read_to_string(out.join("keyexample.json")).unwrap();
    assert!(json.contains("\"d\":0"));
    assert!(json.contains("\"N_1\":1"));
    assert!(json.contains("\"M_1\":1"));
    assert!(json.contains("\"bound_ok\":true"));
    assert!(json.contains("\"courant_failure\":false"));
}

#[test]
fn keyexample_order_one_branch() {
    // Only j_{0,1}^2 sits below the order-1 pole: d = 1 and the half-disk
    // ground state has two domains, saturating N_1 <= 1 + d.
    let out = temp_dir("keyexample-n1");
    let status = bin()
        .args([
            "keyexample",
            "n=1",
            "eps=0.1",
            "target_h=0.06",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(
        status.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    let json = fs::read_to_string(out.join("keyexample.json")).unwrap();
    assert!(json.contains("\"d\":1"), "{json}");
    assert!(json.contains("\"N_1\":2"), "{json}");
    assert!(json.contains("\"bound_ok\":true"));
}

#[test]
fn keyexample_rejects_oversized_eps() {
    // With eps this large the order-3 branch is no longer the ground state.
    let status = bin()
        .args(["keyexample", "n=3", "eps=30", "target_h=0.2"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&status.stderr);
    assert!(stderr.contains("eps too large"), "stderr: {stderr}");
}

#[test]
fn failed_invariant_exits_4_with_report() {
    let out = temp_dir("lemma-fail");
    // An absurdly tight epsilon cannot hold at these indices.
    let status = bin()
        .args([
            "lemma",
            "q=0",
            "target_h=0.15",
            "k_lo=2",
            "k_hi=6",
            "epsilon=0.0001",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(4));
    let failure = fs::read_to_string(out.join("failure.json")).unwrap();
    assert!(failure.contains("\"ok\":false"));
    // Results are still written alongside the failure report.
    assert!(out.join("lemma.csv").exists());
}

#[test]
fn duality_run_produces_certificates_and_curves() {
    let out = temp_dir("duality");
    let status = bin()
        .args([
            "duality",
            "q=0",
            "target_h=0.2",
            "k_max=3",
            "sigma_lo=-3",
            "sigma_hi=3",
            "n_grid=7",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(
        status.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    let curves = fs::read_to_string(out.join("robin_curves.csv")).unwrap();
    assert!(curves.starts_with("sigma,lambda_1,lambda_2,lambda_3\n"));
    assert_eq!(curves.lines().count(), 8);
    let certs = fs::read_to_string(out.join("duality.json")).unwrap();
    assert!(certs.starts_with("[{\"k\":1,"));
}
