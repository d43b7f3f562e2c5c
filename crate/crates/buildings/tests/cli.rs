use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> (i32, Value) {
    let Output { status, stdout, .. } = Command::new(env!("CARGO_BIN_EXE_buildings"))
        .args(args)
        .output()
        .expect("binary runs");
    let report: Value = serde_json::from_slice(&stdout).expect("stdout is one JSON report");
    (status.code().expect("exit code"), report)
}

#[test]
fn verify_reports_three_axiom_suites() {
    let (code, r) = run(&["building", "verify", "--geometry", "PG2:q=2"]);
    assert_eq!(code, 0);
    assert!(r["checks_run"].as_u64().unwrap() >= 3);
    assert_eq!(r["checks_failed"], 0);
    assert_eq!(r["details"]["chambers"], 21);
    assert_eq!(r["schema_version"], 1);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let (code, r) = run(&[
        "building",
        "verify",
        "--geometry",
        "PG2:q=2",
        "--frobnicate",
    ]);
    assert_eq!(code, 2);
    assert_eq!(r["failures"][0]["check"], "usage");
    let (code, _) = run(&["nonsense"]);
    assert_eq!(code, 2);
    let (code, _) = run(&["field", "classify", "--field", "Qp:p=4,prec=3"]);
    assert_eq!(code, 2);
}

#[test]
fn help_exits_zero() {
    let out = Command::new(env!("CARGO_BIN_EXE_buildings"))
        .arg("--help")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("moufang"));
}

#[test]
fn recover_over_f7_has_no_failures() {
    let (code, r) = run(&[
        "projline",
        "recover",
        "--field",
        "F7",
        "--samples",
        "100",
        "--seed",
        "1",
    ]);
    assert_eq!(code, 0);
    assert!(r["details"]["checked"].as_u64().unwrap() >= 100);
    assert_eq!(r["details"]["failures"], Value::Array(vec![]));
}

#[test]
fn failed_check_exits_one_with_witness() {
    let (code, r) = run(&["field", "eval", "--field", "F7", "--op", "inv", "--a", "0"]);
    assert_eq!(code, 1);
    assert_eq!(r["checks_failed"], 1);
    assert_eq!(r["failures"][0]["witness"]["a"], "0");
}

#[test]
fn field_eval_matches_hand_arithmetic() {
    let (code, r) = run(&[
        "field", "eval", "--field", "F7", "--op", "mul", "--a", "3", "--b", "5",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["details"]["result"], "1");
    let (_, r) = run(&[
        "field",
        "eval",
        "--field",
        "Qp:p=5,prec=8",
        "--op",
        "val",
        "--a",
        "50",
    ]);
    assert_eq!(r["details"]["valuation"], 2);
}

#[test]
fn coxeter_matrix_file() {
    let path = std::env::temp_dir().join(format!("b3-{}.txt", std::process::id()));
    std::fs::write(&path, "1 4 2\n4 1 3\n2 3 1\n").unwrap();
    let (code, r) = run(&["coxeter", "--matrix", path.to_str().unwrap(), "--poincare"]);
    std::fs::remove_file(&path).ok();
    assert_eq!(code, 0);
    // B3: order 48, degrees 2, 4, 6
    assert_eq!(r["details"]["order"], 48);
    assert_eq!(r["details"]["longest_length"], 9);
    let poincare: Vec<u64> = serde_json::from_value(r["details"]["poincare"].clone()).unwrap();
    assert_eq!(poincare.iter().sum::<u64>(), 48);
    assert_eq!(poincare.len(), 10);
}

#[test]
fn tree_with_dot_export() {
    let path = std::env::temp_dir().join(format!("tree-{}.dot", std::process::id()));
    let (code, r) = run(&[
        "bt",
        "tree",
        "--field",
        "Qp:p=2,prec=5",
        "--radius",
        "2",
        "--dot",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let dot = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert!(dot.starts_with("graph"));
    // 1 + 3 + 6 vertices, 9 edges
    assert_eq!(dot.matches(" -- ").count(), 9);
    assert_eq!(r["details"]["Qp:p=2,prec=5.ball_radius_2"]["vertices"], 10);
}

#[test]
fn moufang_report_fields() {
    let (code, r) = run(&[
        "moufang",
        "check",
        "--geometry",
        "PG2:q=2",
        "--mu",
        "--commutators",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["details"]["mu_unique"], true);
    assert_eq!(
        r["details"]["group_orders"]["2"],
        r["details"]["roots_checked"]
    );
    assert!(r["details"]["containments"].is_object());
    let (code, r) = run(&[
        "moufang",
        "filtration",
        "--field",
        "Laurent:q=3,prec=6",
        "--from",
        "-2",
        "--to",
        "3",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["details"]["indices"].as_array().unwrap().len(), 5);
}

#[test]
fn json_only_silences_stderr() {
    let out = Command::new(env!("CARGO_BIN_EXE_buildings"))
        .args([
            "bt",
            "boundary",
            "--field",
            "Qp:p=3,prec=4",
            "--depth",
            "2",
            "--json-only",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stderr.is_empty());
}
