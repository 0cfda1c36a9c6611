use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn rehab(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_rehab"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    out
}

fn ok(args: &[&str]) {
    let out = rehab(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Drops every timing field so reports can be compared.
fn untimed(mut v: Value) -> Value {
    let obj = v.as_object_mut().unwrap();
    obj.remove("wall_time");
    for p in obj.get_mut("trace").and_then(Value::as_array_mut).unwrap() {
        p.as_object_mut().unwrap().remove("time");
    }
    v
}

#[test]
fn generate_solve_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    ok(&["gen", "--preset", "nervi", "--seed", "3", "--out", &p("inst.json")]);
    ok(&["gen", "--preset", "nervi", "--seed", "3", "--out", &p("again.json")]);
    assert_eq!(json(&dir.path().join("inst.json")), json(&dir.path().join("again.json")));

    let solve_board = |out: &str| {
        ok(&[
            "solve-board", "--instance", &p("inst.json"), "--mode", "anytime", "--seed", "1",
            "--cutoff", "60", "--node-limit", "20000", "--out", &p(out),
        ])
    };
    solve_board("b1.json");
    solve_board("b2.json");
    let b1 = json(&dir.path().join("b1.json"));
    assert_eq!(untimed(b1.clone()), untimed(json(&dir.path().join("b2.json"))));
    assert!(b1["best"].is_object());

    ok(&[
        "solve-agenda", "--instance", &p("inst.json"), "--board", &p("b1.json"), "--variant", "optimized",
        "--cutoff", "60", "--seed", "4", "--node-limit", "20000", "--out", &p("a1.json"),
    ]);
    let a1 = json(&dir.path().join("a1.json"));
    let (inst, board, agenda) = (p("inst.json"), p("b1.json"), p("a1.json"));
    let mut args = vec!["check", "--instance", &inst, "--board", &board];
    if a1["best"].is_array() {
        args.extend(["--agenda", &agenda]);
    }
    let out = rehab(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("board cost"));
}

#[test]
fn check_reports_violations() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    ok(&["gen", "--preset", "nervi", "--seed", "8", "--out", inst.to_str().unwrap()]);
    let v = json(&inst);
    // An empty board leaves every patient unassigned.
    let board = dir.path().join("board.json");
    std::fs::write(&board, "{}").unwrap();
    let out = rehab(&["check", "--instance", inst.to_str().unwrap(), "--board", board.to_str().unwrap()]);
    assert!(!out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), v["patients"].as_array().unwrap().len());
    assert!(stdout.lines().all(|l| l.starts_with("[B1]")));
}

#[test]
fn oracle_and_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("params.json");
    std::fs::write(&params, r#"{"n_patients": 3, "n_operators": 2}"#).unwrap();
    let inst = dir.path().join("inst.json");
    ok(&["gen", "--params", params.to_str().unwrap(), "--seed", "2", "--out", inst.to_str().unwrap()]);
    let out_path = dir.path().join("oracle.json");
    ok(&["oracle", "--instance", inst.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert!(json(&out_path)["cost"].is_array());

    let out = rehab(&["solve-board", "--instance", "/nonexistent.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = rehab(&["gen", "--preset", "atlantis"]);
    assert_eq!(out.status.code(), Some(2));
    let out = rehab(&["solve-board", "--instance", inst.to_str().unwrap(), "--mode", "fast"]);
    assert!(!out.status.success());
}
