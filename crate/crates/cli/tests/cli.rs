use std::path::PathBuf;
use std::process::{Command, Output};

fn lsat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsat")).args(args).env_remove("LSAT_SOLVER").output().expect("binary runs")
}

fn target(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "targets", name].iter().collect();
    p.to_str().unwrap().to_string()
}

fn s(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_reports_every_attempt_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = lsat(&["synth", "--target", &target("cnot_1q.toml"), "--from-beats", "3", "--out", s(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    let rows: Vec<&str> = report.lines().skip(1).collect();
    assert!(rows[0].split_whitespace().take(2).eq(["3", "UNSAT"]), "{report}");
    assert!(rows[1].split_whitespace().take(2).eq(["4", "SAT"]), "{report}");
    for f in ["bulk.json", "report.json", "bulk_mesh.obj", "slice_0.svg", "slice_5.svg"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let v = lsat(&["verify", "--target", &target("cnot_1q.toml"), "--bulk", s(&dir.path().join("bulk.json"))]);
    assert!(v.status.success());
}

#[test]
fn corrupted_bulk_fails_verification_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let out = lsat(&["synth", "--target", &target("idle.toml"), "--from-beats", "2", "--out", s(dir.path())]);
    assert!(out.status.success());
    let path = dir.path().join("bulk.json");
    let mut bulk: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let faces = bulk["faces"].as_array_mut().unwrap();
    let victim = faces.iter().position(|f| f["k"] == 1).unwrap();
    faces.remove(victim);
    std::fs::write(&path, bulk.to_string()).unwrap();
    let v = lsat(&["verify", "--target", &target("idle.toml"), "--bulk", s(&path)]);
    assert_eq!(v.status.code(), Some(5));
    let err = String::from_utf8_lossy(&v.stderr);
    assert!(err.contains("LS:") || err.contains("Func:"), "{err}");
}

#[test]
fn exported_cnf_round_trips_through_a_solver_process() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = dir.path().join("i.cnf");
    let names = dir.path().join("i.map");
    let t = target("cnot_1q.toml");
    assert!(lsat(&["export-cnf", "--target", &t, "--beats", "4", "--out", s(&cnf), "--names", s(&names)]).status.success());
    let header = std::fs::read_to_string(&cnf).unwrap();
    assert!(header.starts_with("p cnf "));
    assert!(std::fs::read_to_string(&names).unwrap().contains("FaceExist"));
    let solved = lsat(&["solve", s(&cnf)]);
    assert!(String::from_utf8_lossy(&solved.stdout).starts_with("s SATISFIABLE"));
    let model = dir.path().join("i.sol");
    std::fs::write(&model, &solved.stdout).unwrap();
    let bulk = dir.path().join("b.json");
    assert!(lsat(&["decode", "--target", &t, "--beats", "4", "--model", s(&model), "--out", s(&bulk)]).status.success());
    assert!(lsat(&["verify", "--target", &t, "--bulk", s(&bulk)]).status.success());
}

#[test]
fn external_solver_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let me = format!("{} solve", env!("CARGO_BIN_EXE_lsat"));
    let ok = lsat(&["synth", "--target", &target("idle.toml"), "--from-beats", "2", "--solver", &me, "--out", s(dir.path())]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));

    let capped = lsat(&["synth", "--target", &target("cnot_1q.toml"), "--from-beats", "2", "--max-beats", "3", "--out", s(dir.path())]);
    assert_eq!(capped.status.code(), Some(3));

    let slow = lsat(&["synth", "--target", &target("idle.toml"), "--from-beats", "2", "--solver", "sleep 5", "--timeout", "0.3", "--out", s(dir.path())]);
    assert_eq!(slow.status.code(), Some(4));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "m = [").unwrap();
    assert_eq!(lsat(&["flows", "--target", s(&bad)]).status.code(), Some(2));
}

#[test]
fn solver_defaults_to_environment_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lsat"))
        .args(["synth", "--target", &target("idle.toml"), "--from-beats", "2", "--timeout", "0.3", "--out", s(dir.path())])
        .env("LSAT_SOLVER", "sleep 5")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn flows_render_and_bench() {
    let f = lsat(&["flows", "--target", &target("cnot_1q.toml")]);
    let text = String::from_utf8_lossy(&f.stdout);
    assert!(text.contains("X1 -> X1X2") && text.contains("Z2 -> Z1Z2"), "{text}");

    let dir = tempfile::tempdir().unwrap();
    let circuit = dir.path().join("c.txt");
    std::fs::write(&circuit, "CNOT 0 1\n").unwrap();
    let json = dir.path().join("c.json");
    let b = lsat(&["bench", "--circuit", s(&circuit), "--json", s(&json)]);
    assert!(b.status.success());
    let c: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(c["reduction"], 50.0);
    assert!(lsat(&["bench", "--random", "4,50,3"]).status.success());
    assert_eq!(lsat(&["bench", "--random", "4,50"]).status.code(), Some(2));

    let syn = dir.path().join("s");
    assert!(lsat(&["synth", "--target", &target("idle.toml"), "--from-beats", "2", "--out", s(&syn)]).status.success());
    let r = dir.path().join("r");
    assert!(lsat(&["render", "--bulk", s(&syn.join("bulk.json")), "--out", s(&r)]).status.success());
    assert_eq!(std::fs::read(r.join("bulk_mesh.obj")).unwrap(), std::fs::read(syn.join("bulk_mesh.obj")).unwrap());
}

#[test]
fn identical_embedded_runs_give_identical_bulks() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert!(lsat(&["synth", "--target", &target("move_2q.toml"), "--from-beats", "2", "--out", s(d.path())]).status.success());
    }
    assert_eq!(std::fs::read(a.path().join("bulk.json")).unwrap(), std::fs::read(b.path().join("bulk.json")).unwrap());
}
