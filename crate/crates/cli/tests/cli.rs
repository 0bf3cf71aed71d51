use std::process::{Command, Output};

use serde_json::Value;

fn fracbubble(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracbubble")).args(args).env_remove("FRACBUBBLE_BUDGET").output().expect("spawn fracbubble")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

#[test]
fn constants_n2_quarter() {
    let o = fracbubble(&["constants", "--n", "2", "--gamma", "0.25"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let c1 = v["constants"]["c1"].as_f64().unwrap();
    let c3 = v["constants"]["c3"].as_f64().unwrap();
    assert!((c1 / std::f64::consts::PI - 1.0).abs() < 1e-6);
    assert!((c3 / (4.0 * std::f64::consts::PI) - 1.0).abs() < 1e-6);
    for c in v["checks"].as_array().unwrap() {
        assert_eq!(c["pass"], Value::Bool(true), "{c}");
    }
}

#[test]
fn constants_near_half_are_named_skips() {
    let o = fracbubble(&["constants", "--n", "2", "--gamma", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["constants"]["c1"].is_number());
    assert!(v["constants"]["c3"].is_number());
    for k in ["c_frac", "d_star"] {
        assert_eq!(v["constants"][k], "skipped: near_half");
    }
    let skipped: Vec<&str> = v["checks"].as_array().unwrap().iter().filter(|c| c["rule"] == "skipped").filter_map(|c| c["id"].as_str()).collect();
    assert!(skipped.contains(&"constants.relation.c2"));
}

#[test]
fn validation_errors_exit_two() {
    assert_eq!(fracbubble(&["constants", "--n", "1", "--gamma", "0.5"]).status.code(), Some(2));
    assert_eq!(fracbubble(&["constants", "--n", "2", "--gamma", "1.5"]).status.code(), Some(2));
    assert_eq!(fracbubble(&["constants", "--n", "2"]).status.code(), Some(2));
    assert_eq!(fracbubble(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(fracbubble(&["constants", "--bogus"]).status.code(), Some(2));
}

#[test]
fn budget_env_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_fracbubble"))
        .args(["constants", "--n", "2", "--gamma", "0.25"])
        .env("FRACBUBBLE_BUDGET", "lots")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn spectral_suite_csv() {
    let o = fracbubble(&["verify", "--suite", "spectral", "--n", "2", "--gamma", "0.25", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,gamma,id,paper_ref,observed,expected,tol,pass"));
    assert!(text.contains("spectral.half_degeneracy.dirichlet.contains_1_3"));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.lines().all(|l| l.contains("PASS")), "{stderr}");
}

#[test]
fn tolerance_override_can_fail_a_check() {
    let o = fracbubble(&["verify", "--suite", "spectral", "--n", "2", "--gamma", "0.25", "--tol", "spectral.solvability.dirichlet.min_abs=1e9"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL spectral.solvability.dirichlet.min_abs"));
}

#[test]
fn interaction_sweep_has_gap_ratio() {
    let o = fracbubble(&["sweep", "--kind", "interaction", "--n", "2", "--gamma", "0.25", "--ratios", "10,30,100"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert!(header.contains(&"gap_ratio"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn barycenter_sweep_table() {
    let o = fracbubble(&["sweep", "--kind", "barycenter", "--p", "2", "--seps", "4,8,16"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("p,sep,eps_sum,quotient,bound,deficit,deficit_per_eps\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn sharp_sweep_is_deterministic() {
    let args = ["sweep", "--kind", "sharp", "--lambda", "10,30,100"];
    let a = fracbubble(&args);
    let b = fracbubble(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert!(stdout(&a).starts_with("lambda,value_dev,y_derivative_dev,x_gradient_dev\n"));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn degeneracies_at_half() {
    let o = fracbubble(&["degeneracies", "--condition", "dirichlet", "--n", "2", "--bound", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["zeros"].as_array().unwrap().contains(&serde_json::json!([1, 3])));
    assert_eq!(fracbubble(&["degeneracies", "--condition", "neumann", "--gamma", "0.25"]).status.code(), Some(2));
}

#[test]
fn field_export_writes_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("field.csv");
    let o = fracbubble(&["field", "--n", "2", "--gamma", "0.25", "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("y,r,value\n"));
    let side: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("field.json")).unwrap()).unwrap();
    assert_eq!(side["meta"]["n"], 2);
    assert!(side["grid"].is_object());
    assert_eq!(fracbubble(&["field", "--n", "2", "--gamma", "0.25"]).status.code(), Some(2));
}
