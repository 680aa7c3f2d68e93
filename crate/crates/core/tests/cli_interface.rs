//! End-to-end checks of the command-line surface: config grammar, CSV
//! output, determinism and exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dqd-lgi"))
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dqd-lgi-cli-{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const CONFIG: &str = "\
[dots]
e11 = 1.0
e22 = 1.0
e12 = 0.5

[left]
coupling = 0.2
W = 1.0
mu = 5.0
kT = 0.1

[right]
coupling = 0.2
W = 1.0
mu = -5.0
kT = 0.1

[run]
topology = series
scenario = open_c3
tau_min = 0.5
tau_max = 1.5
tau_steps = 3
grid_dt = 0.02
";

fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(&path, CONFIG).unwrap();
    path
}

#[test]
fn sweep_from_config_writes_expected_csv() {
    let dir = workdir("sweep");
    let cfg = write_config(&dir);
    let out = dir.join("sweep.csv");
    let status = binary()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau,C21,C32,C31,C3,violates"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("5.00000000000e-1,"));
    assert!(rows[0].ends_with(",true") || rows[0].ends_with(",false"));
}

#[test]
fn identical_runs_are_byte_identical_across_worker_counts() {
    let dir = workdir("determinism");
    let cfg = write_config(&dir);
    let mut outputs = Vec::new();
    for (i, workers) in ["1", "2"].iter().enumerate() {
        let out = dir.join(format!("sweep{i}.csv"));
        let status = binary()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(["--workers", workers])
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "CSV bytes differ between runs");
}

#[test]
fn c4_scenario_gets_the_wide_header() {
    let dir = workdir("c4");
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, CONFIG.replace("open_c3", "open_c4")).unwrap();
    let out = dir.join("sweep.csv");
    assert!(binary()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("tau,C21,C32,C31,C43,C41,C3,C4,violates\n"));
}

#[test]
fn preset_listing_and_multi_curve_outputs() {
    let dir = workdir("preset");
    let listing = binary().arg("presets").output().unwrap();
    assert!(listing.status.success());
    let text = String::from_utf8(listing.stdout).unwrap();
    for name in ["fig2a", "fig4a", "fig8"] {
        assert!(text.contains(name), "presets listing misses {name}");
    }

    let out = dir.join("fig2a.csv");
    assert!(binary()
        .args(["sweep", "--preset", "fig2a", "--out"])
        .arg(&out)
        .status()
        .unwrap()
        .success());
    for label in ["e12_0.3", "e12_0.5", "e12_1"] {
        let path = dir.join(format!("fig2a_{label}.csv"));
        assert!(path.exists(), "missing curve file {label}");
    }
}

#[test]
fn trace_dump_has_the_documented_columns() {
    let dir = workdir("traces");
    let cfg = write_config(&dir);
    let out = dir.join("sweep.csv");
    let traces = dir.join("traces.csv");
    assert!(binary()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--dump-traces")
        .arg(&traces)
        .status()
        .unwrap()
        .success());
    let text = std::fs::read_to_string(&traces).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("t,re_u11,im_u11"));
    assert!(header.ends_with("re_v22,im_v22"));
    // one row per grid node over [0, 3 * 1.5] at dt = 0.02
    assert_eq!(text.lines().count() - 1, 226);
}

#[test]
fn parameter_errors_exit_one() {
    let dir = workdir("errors");
    // malformed config
    let bad = dir.join("bad.cfg");
    std::fs::write(&bad, "[dots]\ne11 = not-a-number\n").unwrap();
    let status = binary()
        .args(["sweep", "--config"])
        .arg(&bad)
        .args(["--out", "x.csv"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // unknown preset
    let status = binary()
        .args(["sweep", "--preset", "fig99", "--out", "x.csv"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // neither config nor preset
    let status = binary().args(["sweep", "--out", "x.csv"]).status().unwrap();
    assert_eq!(status.code(), Some(1));

    // bad flag
    let status = binary().args(["sweep", "--nonsense"]).status().unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn oracle_check_passes_and_coarse_step_fails() {
    let dir = workdir("oracle");
    let cfg = write_config(&dir);
    let report = dir.join("report.csv");
    let output = binary()
        .args(["oracle-check", "--config"])
        .arg(&cfg)
        .args(["--taus", "0.5,1.0", "--oracle-modes", "64", "--out"])
        .arg(&report)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("tau,C3_negf,C3_oracle,abs_diff,within_validity,pass"));
    assert!(!text.contains("false"), "unexpected failing row: {text}");

    // a deliberately coarse step must be caught by the cross-check
    let status = binary()
        .args(["oracle-check", "--config"])
        .arg(&cfg)
        .args(["--taus", "0.5,1.0,2.0", "--dt", "0.2"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2), "coarse-step run should exit 2");
}

#[test]
fn decoupled_oracle_check_is_exact() {
    let dir = workdir("oracle-closed");
    let cfg = dir.join("run.cfg");
    std::fs::write(
        &cfg,
        CONFIG.replace("coupling = 0.2", "coupling = 0.0"),
    )
    .unwrap();
    let output = binary()
        .args(["oracle-check", "--config"])
        .arg(&cfg)
        .args(["--taus", "0.5,1.0,2.0", "--oracle-modes", "4"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    for line in text.lines().filter(|l| l.starts_with("tau")) {
        let diff: f64 = line
            .split("|diff| = ")
            .nth(1)
            .unwrap()
            .split_whitespace()
            .next()
            .unwrap()
            .parse()
            .unwrap();
        assert!(diff < 1e-8, "decoupled check not exact: {line}");
    }
}
