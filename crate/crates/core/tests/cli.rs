use std::path::Path;
use std::process::{Command, Output};

fn kgm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgm-vortex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report_value(dir: &Path, key: &str) -> Option<String> {
    let text = std::fs::read_to_string(dir.join("report.txt")).ok()?;
    text.lines()
        .filter_map(|l| l.split_once(" = "))
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v.to_string())
}

const SMALL: &str =
    "[grid]\nn_r = 48\nn_z = 48\nr_max = 16.0\nz_half = 8.0\n\n[physics]\nlambda = 6.0\n";

#[test]
fn negative_charge_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[physics]\nq = -0.1\n").unwrap();
    let out = kgm(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`q`"), "{err}");
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[grid]\nnr = 10\n").unwrap();
    let out = kgm(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_then_diagnose_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let solved = dir.path().join("solve");
    let out = kgm(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        solved.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let lambda: f64 = report_value(&solved, "Lambda").unwrap().parse().unwrap();
    assert!(lambda < 1.0);
    for key in ["residual.z1", "residual.z3", "residual.z4"] {
        let r: f64 = report_value(&solved, key).unwrap().parse().unwrap();
        assert!(r <= 1e-5, "{key} = {r}");
    }
    let header = std::fs::read_to_string(solved.join("u.csv")).unwrap();
    assert_eq!(header.lines().count(), 48 * 48 + 1);

    let ckpt = solved.join("state.ckpt");
    let cfg2 = dir.path().join("diag.toml");
    std::fs::write(
        &cfg2,
        format!(
            "{SMALL}\n[run]\ncheckpoint = {:?}\n",
            ckpt.to_str().unwrap()
        ),
    )
    .unwrap();
    let diag = dir.path().join("diag");
    let out = kgm(&[
        "diagnose",
        "--config",
        cfg2.to_str().unwrap(),
        "--output",
        diag.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        report_value(&diag, "energy"),
        report_value(&solved, "energy")
    );
    assert!(diag.join("h_z.csv").exists());
}

#[test]
fn diagnose_without_checkpoint_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = kgm(&["diagnose", "--output", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(
        report_value(dir.path(), "error").as_deref(),
        Some("ConfigError")
    );
}
