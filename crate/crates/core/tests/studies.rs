//! Small end-to-end studies through the library entry point.

use std::path::Path;

use nsbox::experiments::{emit_report, run_study, StudyConfig};

const SOLUTION: &str = r#"
kind = "solution"
alphas = [1.0, 2.0]
base_n = 8
reference_alpha = 4.0
[initial_data]
kind = "bump_vorticity"
support_radius = 0.5
amplitude = 1.0
[solver]
dt = 0.001
t_end = 0.004
snapshot_every = 2
audit_every = 1
"#;

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
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
fn thread_count_does_not_change_the_output() {
    let cfg = StudyConfig::from_toml(SOLUTION).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let serial = run_study(&cfg, 1).unwrap();
    let parallel = run_study(&cfg, 2).unwrap();
    emit_report(&serial, Some(&cfg), a.path(), None).unwrap();
    emit_report(&parallel, Some(&cfg), b.path(), None).unwrap();
    let (x, y) = (csv_bytes(a.path()), csv_bytes(b.path()));
    assert!(x.len() >= 4);
    assert!(x == y);
}

#[test]
fn solution_report_round_trips_through_metadata() {
    let cfg = StudyConfig::from_toml(SOLUTION).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run_study(&cfg, 1).unwrap();
    emit_report(&report, Some(&cfg), dir.path(), Some(9)).unwrap();
    let back = StudyConfig::from_metadata(&dir.path().join("metadata.toml")).unwrap();
    assert_eq!(back, cfg);
    let meta = std::fs::read_to_string(dir.path().join("metadata.toml")).unwrap();
    assert!(meta.contains("seed = 9"));
    let diag = report.table("diagnostics").unwrap();
    // every box plus the reference, one row per audit
    assert_eq!(diag.rows.len(), 3 * 5);
}

#[test]
fn tail_bound_on_a_small_box() {
    let cfg = StudyConfig::from_toml(
        r#"
kind = "tail"
alphas = [3.0]
base_n = 24
[initial_data]
kind = "bump_velocity"
support_radius = 0.5
amplitude = 1.0
[solver]
dt = 0.001
t_end = 0.005
snapshot_every = 1
[tail]
inner_radius = 0.75
radii = [1.5, 2.0, 2.5]
"#,
    )
    .unwrap();
    let report = run_study(&cfg, 1).unwrap();
    assert!(report.passed(), "{:?}", report.failures());
    let t = report.table("tail").unwrap();
    assert_eq!(t.rows.len(), 6 * 3);
    let margins = t.values("margin");
    assert!(margins.iter().all(|m| *m >= 0.0));
}
