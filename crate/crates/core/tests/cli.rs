use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uavsec"))
}

#[test]
fn topology_k4_lists_fekete_points() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["topology", "--K", "4", "--seed", "5", "--output-dir"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(st.success());
    let csv = fs::read_to_string(dir.path().join("topology_5.csv")).unwrap();
    let fekete: Vec<f64> = csv
        .lines()
        .filter(|l| l.starts_with("fekete,"))
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    let s = 0.2f64.sqrt();
    for (x, e) in fekete.iter().zip([-1.0, -s, s, 1.0]) {
        assert!((x - e).abs() < 1e-6);
    }
    assert!(dir.path().join("config_snapshot.txt").exists());
}

#[test]
fn unknown_key_fails_with_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["capacity-sweep", "--set", "array.width=3", "--output-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("kind = \"unknown_key\""), "{err}");
}

#[test]
fn infeasible_scenario_reports_cause() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["secrecy-eval", "--set", "power.P_max_dbm=-40", "--output-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("kind = \"infeasible\""), "{err}");
    assert!(err.contains("constraint_family"), "{err}");
}

#[test]
fn snapshot_reruns_identically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(bin().args(["capacity-sweep", "--seed", "3", "--output-dir"]).arg(a.path()).status().unwrap().success());
    let snap = a.path().join("config_snapshot.txt");
    assert!(bin()
        .args(["capacity-sweep", "--config"])
        .arg(&snap)
        .arg("--output-dir")
        .arg(b.path())
        .status()
        .unwrap()
        .success());
    assert_eq!(
        fs::read(a.path().join("capacity_sweep_3.csv")).unwrap(),
        fs::read(b.path().join("capacity_sweep_3.csv")).unwrap()
    );
}

#[test]
fn validate_passes_on_reference() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin().args(["validate", "--output-dir"]).arg(dir.path()).status().unwrap();
    assert!(st.success());
}
