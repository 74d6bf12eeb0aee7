use std::path::Path;
use std::process::Command;

fn openness(dir: &Path, args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_openness"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("exit code")
}

const WEIGHT: &str = r#"{"n": 1, "terms": [{"kind": "linear", "slope": 5, "piece": 1}], "breakpoints": [0]}"#;

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(openness(d, &["integrability", "sweep", "--N", "5..3"]), 2);
    assert_eq!(openness(d, &["norm", "--weight", "missing.json", "--alpha", "1"]), 2);
    assert_eq!(openness(d, &["approx", "run", "--f", "missing.json"]), 2);
    std::fs::write(d.join("bad.json"), r#"{"no_such_flag": 1}"#).unwrap();
    assert_eq!(openness(d, &["--config", "bad.json", "bounds", "coefficient"]), 2);
    assert_eq!(openness(d, &["bounds", "coefficient", "--r", "1.5"]), 2);
}

#[test]
fn divergent_norm_exits_4_and_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("w.json"), WEIGHT).unwrap();
    assert_eq!(openness(d, &["norm", "--weight", "w.json", "--alpha", "1", "--out", "a.json"]), 0);
    assert_eq!(openness(d, &["norm", "--weight", "w.json", "--alpha", "2", "--out", "b.json"]), 4);
    let csv = std::fs::read_to_string(d.join("b.csv")).unwrap();
    assert!(csv.lines().nth(2).unwrap().starts_with("(2),"));
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("c.json"), r#"{"N": "3..4", "alpha": "0"}"#).unwrap();
    assert_eq!(openness(d, &["--config", "c.json", "integrability", "sweep", "--N", "1..9", "--out", "s.json"]), 0);
    let csv = std::fs::read_to_string(d.join("s.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 1 + 2);
}

#[test]
fn verify_rejects_a_tampered_instance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(openness(d, &["counterexample", "build", "--kmax", "4", "--out", "inst.json"]), 0);
    assert_eq!(openness(d, &["counterexample", "verify", "inst.json", "--out", "v.json"]), 0);
    let mut inst: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("inst.json")).unwrap()).unwrap();
    inst["levels"][1]["C"] = serde_json::json!(0.0);
    std::fs::write(d.join("bad.json"), inst.to_string()).unwrap();
    assert_eq!(openness(d, &["counterexample", "verify", "bad.json", "--out", "v2.json"]), 3);
}
