//! End-to-end checks of the command-line surface: exit codes, CSV shape, and
//! config handling.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mirsim"))
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("mirsim_cli_{}_{name}", std::process::id()));
    p
}

#[test]
fn sweep_writes_csv_and_exits_zero() {
    let out = tmp("sweep.csv");
    let status = bin()
        .args([
            "sweep",
            "--axis",
            "P_I",
            "--values",
            "0.04",
            "--methods",
            "nsp-zf-pa,max-tr-svd",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("method,axis_name,axis_value,sum_rate_bps_hz"));
    assert!(lines[1].starts_with("nsp-zf-pa,P_I,"));
    assert!(lines[2].starts_with("max-tr-svd,P_I,"));
    std::fs::remove_file(&out).ok();
}

#[test]
fn unknown_config_key_exits_one() {
    let cfg = tmp("bad.toml");
    std::fs::write(&cfg, "bs_antennas = 8\nnot_a_key = 3\n").unwrap();
    let out = tmp("never.csv");
    let status = bin()
        .args(["sweep", "--axis", "P_I", "--values", "0.04", "--out"])
        .arg(&out)
        .arg("--config")
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    assert!(!out.exists());
    std::fs::remove_file(&cfg).ok();
}

#[test]
fn invalid_axis_exits_one() {
    let out = tmp("axis.csv");
    let status = bin()
        .args(["sweep", "--axis", "bogus", "--values", "1", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn per_point_failure_exits_two_with_rows() {
    // collinear IRS placements collapse the spatial rank, so every point
    // fails in the solver but the sweep still writes its rows
    let cfg = tmp("collinear.toml");
    std::fs::write(
        &cfg,
        "irs_count = 2\nelements_per_irs = 4\nirs_pos = [[80.0, 20.0], [160.0, 40.0]]\n",
    )
    .unwrap();
    let out = tmp("failed.csv");
    let status = bin()
        .args([
            "sweep",
            "--axis",
            "P_I",
            "--values",
            "0.04",
            "--methods",
            "nsp-zf-pa",
            "--out",
        ])
        .arg(&out)
        .arg("--config")
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().nth(1).unwrap().contains("error:"));
    std::fs::remove_file(&cfg).ok();
    std::fs::remove_file(&out).ok();
}

#[test]
fn trace_subcommand_writes_iterations() {
    let out = tmp("trace.csv");
    let cfg = tmp("trace_cfg.toml");
    std::fs::write(&cfg, "elements_per_irs = 4\n").unwrap();
    let status = bin()
        .args(["trace", "--method", "wmmse-pc", "--out"])
        .arg(&out)
        .arg("--config")
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(lines[0], "iteration,objective");
    assert!(lines.len() > 2, "expected a multi-point trace");
    assert!(lines.len() <= 202, "trace is capped by the iteration limit");
    std::fs::remove_file(&out).ok();
    std::fs::remove_file(&cfg).ok();
}

#[test]
fn show_config_prints_resolved_positions() {
    let output = bin().args(["show-config"]).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.contains("irs_pos"));
    assert!(text.contains("80.0"));
    assert!(text.contains("per_irs_power_split"));
}

#[test]
fn sweep_reruns_are_byte_identical() {
    let out_a = tmp("det_a.csv");
    let out_b = tmp("det_b.csv");
    for out in [&out_a, &out_b] {
        let status = bin()
            .args([
                "sweep",
                "--axis",
                "N_I",
                "--values",
                "16,32",
                "--methods",
                "nsp-zf-pa,wmmse-pc",
                "--seed",
                "5",
                "--out",
            ])
            .arg(out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    assert_eq!(
        std::fs::read(&out_a).unwrap(),
        std::fs::read(&out_b).unwrap()
    );
    std::fs::remove_file(&out_a).ok();
    std::fs::remove_file(&out_b).ok();
}
