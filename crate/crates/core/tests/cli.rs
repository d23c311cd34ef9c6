//! The `nsbox` binary: exit codes, output files and reruns from a report.

use std::path::Path;
use std::process::{Command, Output};

use nsbox::initial_data::taylor_green;
use nsbox::spectral::{write_snapshot, BoxGrid};

const INVERSION: &str = r#"
kind = "inversion"
alphas = [1.0, 2.0]
base_n = 16
reference_alpha = 4.0
[initial_data]
kind = "bump_vorticity"
support_radius = 0.5
amplitude = 1.0
"#;

const TAIL: &str = r#"
kind = "tail"
alphas = [3.0]
base_n = 24
[initial_data]
kind = "bump_velocity"
support_radius = 0.5
amplitude = 1.0
[solver]
dt = 0.001
t_end = 0.004
snapshot_every = 1
[tail]
inner_radius = 0.75
radii = [1.5, 2.5]
"#;

fn nsbox(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsbox")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn passing_study_exits_zero_and_reruns_from_its_metadata() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "tail.toml", TAIL);
    let first = tmp.path().join("first");
    let out = nsbox(&["tail", "--config", &cfg, "--out", first.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.lines().any(|l| l.starts_with("PASS tail_bound_holds")));
    for f in ["tail.csv", "tail_constants.csv", "checks.csv", "metadata.toml"] {
        assert!(first.join(f).exists(), "missing {f}");
    }
    let meta = first.join("metadata.toml");
    let second = tmp.path().join("second");
    let out = nsbox(&["tail", "--config", meta.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let (a, b) = (csvs(&first), csvs(&second));
    assert_eq!(a.len(), 3);
    assert!(a == b, "rerun from metadata changed the CSV output");
}

#[test]
fn empty_alpha_list_is_a_config_error_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", &INVERSION.replace("[1.0, 2.0]", "[]"));
    let out_dir = tmp.path().join("out");
    let out = nsbox(&["inversion", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn config_mistakes_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let out_arg = out_dir.to_str().unwrap();
    let typo = write(tmp.path(), "typo.toml", &format!("{INVERSION}\nbase_nn = 3\n"));
    assert_eq!(nsbox(&["inversion", "--config", &typo, "--out", out_arg]).status.code(), Some(2));
    let good = write(tmp.path(), "good.toml", INVERSION);
    assert_eq!(nsbox(&["tail", "--config", &good, "--out", out_arg]).status.code(), Some(2));
    let missing = tmp.path().join("nope.toml");
    assert_eq!(
        nsbox(&["inversion", "--config", missing.to_str().unwrap(), "--out", out_arg]).status.code(),
        Some(2)
    );
    let small = write(
        tmp.path(),
        "small.toml",
        &INVERSION.replace("support_radius = 0.5", "support_radius = 1.5"),
    );
    assert_eq!(nsbox(&["inversion", "--config", &small, "--out", out_arg]).status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn failed_check_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "transfer.toml",
        r#"
kind = "transfer"
alphas = [1.0]
base_n = 8
reference_alpha = 2.0
[initial_data]
kind = "bump_vorticity"
support_radius = 0.5
amplitude = 1.0
[solver]
dt = 0.001
t_end = 0.01
blowup_enstrophy = 1e-6
"#,
    );
    let out_dir = tmp.path().join("out");
    let out = nsbox(&["transfer", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL reference_completed"));
    let checks = std::fs::read_to_string(out_dir.join("checks.csv")).unwrap();
    assert!(checks.contains("reference_completed"));
}

#[test]
fn audit_of_a_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let g = BoxGrid::new(std::f64::consts::PI, 16).unwrap();
    let snap = write_snapshot(tmp.path(), "tg", &taylor_green(&g), 0.0).unwrap();
    let out_dir = tmp.path().join("audit");
    let out = nsbox(&["audit", snap.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(out_dir.join("audit.csv")).unwrap();
    assert!(table.starts_with("quantity,value"));
    assert!(table.contains("agmon_ratio"));
    let missing = tmp.path().join("none.bin");
    assert_eq!(
        nsbox(&["audit", missing.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]).status.code(),
        Some(2)
    );
}
