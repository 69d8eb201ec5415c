use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cch(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cch"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn cch")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

const SMALL_RUN: &str = r#"{
  "mesh": {"type": "rect", "nx": 6, "ny": 6},
  "initial": {"type": "two_circles", "centers": [[0.3, 0.5], [0.7, 0.5]]},
  "t_final": 3e-4,
  "cch": {"eps": 0.05, "dt": 1e-4}
}"#;

#[test]
fn run_writes_diagnostics_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "run.json", SMALL_RUN);
    let out = cch(&["run", "run.json", "--output-dir", "out"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/diagnostics.csv")).unwrap();
    assert!(csv.starts_with("step,time,min_u,max_u,mass,energy,dynamics,newton_iters,residual"));
    assert_eq!(csv.lines().count(), 5);
    assert!(fs::read_dir(dir.path().join("out")).unwrap().any(|e| e.unwrap().path().extension().is_some_and(|x| x == "vtk")));
    assert!(String::from_utf8_lossy(&out.stdout).contains("3 steps"));
}

#[test]
fn quiet_run_prints_nothing() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "run.json", SMALL_RUN);
    let out = cch(&["run", "run.json", "--quiet", "--output-dir", "q"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty() && out.stderr.is_empty());
}

#[test]
fn transport_accepts_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "t.json",
        r#"{
  "mesh": {"type": "disk", "rings": 4, "sectors": 6},
  "initial": {"type": "random_spinodal", "mean": 0.5, "amplitude": 0.3},
  "velocity": {"type": "rotation", "omega": 1.0},
  "t_final": 0.1,
  "transport": {"dt": 0.05}
}"#,
    );
    let a = cch(&["transport", "t.json", "--seed", "3", "--output-dir", "a", "--quiet"], dir.path());
    let b = cch(&["transport", "t.json", "--seed", "3", "--output-dir", "b", "--quiet"], dir.path());
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(b.status.code(), Some(0));
    let read = |d: &str| fs::read_to_string(dir.path().join(d).join("diagnostics.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.json", r#"{"mesh": {"type": "rect", "nx": 4, "ny": 4}, "t_final": 1.0}"#);
    write(
        dir.path(),
        "neg.json",
        &SMALL_RUN.replace(r#""dt": 1e-4"#, r#""dt": -1e-4"#),
    );
    for args in [["run", "bad.json"], ["run", "neg.json"], ["run", "missing.json"]] {
        let out = cch(&args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}

#[test]
fn solver_failure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "hard.json",
        &SMALL_RUN.replace(r#""dt": 1e-4"#, r#""dt": 1e-4, "newton_max_iter": 1, "newton_abs_tol": 1e-300, "newton_rel_tol": 1e-300"#),
    );
    let out = cch(&["run", "hard.json", "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at step 1"));
}

#[test]
fn mesh_info_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "sq.mesh", "4 2\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n");
    let out = cch(&["mesh-info", "sq.mesh"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("cells           2"));
    assert!(text.contains("interior edges  1"));
    assert!(text.contains("boundary edges  4"));
    let missing = cch(&["mesh-info", "nope.mesh"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
}
