use std::path::Path;
use std::process::{Command, Output};

fn modunif(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modunif"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_program(dir: &Path, text: &str) -> String {
    let path = dir.join("prog.txt");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(modunif(&["valid", "--logic", "ku"]).status.code(), Some(1));
    assert_eq!(modunif(&["nonsense"]).status.code(), Some(1));
    assert_eq!(
        modunif(&["valid", "--logic", "ku", "--formula", "p1 &"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(modunif(&["--help"]).status.code(), Some(0));
}

#[test]
fn validity_and_satisfiability() {
    let o = modunif(&["valid", "--logic", "ku", "--formula", "[u]p1 -> []p1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("valid"));
    let o = modunif(&["valid", "--logic", "ku", "--formula", "p1 -> []p1"]);
    assert!(stdout(&o).starts_with("not valid"));
    let o = modunif(&[
        "sat",
        "--logic",
        "kh2",
        "--formula",
        "<>(n1 & p1) & <>(n1 & ~p1)",
    ]);
    assert!(stdout(&o).starts_with("unsatisfiable"));
    let o = modunif(&["ground-unify", "--logic", "ku", "--formula", "[u]p1"]);
    assert_eq!(stdout(&o).trim(), "p1 := true");
}

#[test]
fn exhausted_budget_exits_with_two() {
    let o = modunif(&[
        "sat",
        "--logic",
        "ku",
        "--formula",
        "<><>true",
        "--engine",
        "graph",
        "--budget",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn frame_then_modelcheck() {
    let dir = tempfile::tempdir().unwrap();
    let prog = write_program(dir.path(), "");
    let o = modunif(&["frame", "--program", &prog, "--start", "1,0,0"]);
    assert_eq!(o.status.code(), Some(0));
    let frame = dir.path().join("frame.txt");
    std::fs::write(&frame, stdout(&o)).unwrap();
    let o = modunif(&[
        "modelcheck",
        "--frame",
        frame.to_str().unwrap(),
        "--point",
        "a",
        "--formula",
        "<>true & []<>true",
    ]);
    assert_eq!(stdout(&o).trim(), "true");
}

#[test]
fn reduce_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let prog = write_program(dir.path(), "1 -> 2,+1,0\n");
    let out = dir.path().join("out");
    let o = modunif(&[
        "reduce",
        "--program",
        &prog,
        "--start",
        "1,1,1",
        "--target",
        "2,2,1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    for f in ["psi.txt", "axp.txt", "sigma.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn verify_reports_and_flags_refuted_witnesses() {
    let dir = tempfile::tempdir().unwrap();
    let prog = write_program(dir.path(), "1 -> 2,+1,0\n");
    let report = dir.path().join("report.json");
    let o = modunif(&[
        "verify",
        "--program",
        &prog,
        "--start",
        "1,0,0",
        "--target",
        "3,0,0",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["verdict"]["kind"], "NotUnifiable");
    let o = modunif(&[
        "verify",
        "--program",
        &prog,
        "--start",
        "1,1,1",
        "--target",
        "2,2,1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(json["verdict"]["evidence"]["method"], "TableauProof");
    let o = modunif(&[
        "verify",
        "--program",
        &prog,
        "--start",
        "1,0,0",
        "--target",
        "2,1,0",
    ]);
    assert_eq!(o.status.code(), Some(3));
}
