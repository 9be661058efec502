use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn vacq(args: &[&str], input: &Value) -> Output {
    let dir = std::env::temp_dir().join(format!("vacq-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path: PathBuf = dir.join(format!("{}.json", args.join("_").replace(['/', ','], "-")));
    std::fs::write(&path, input.to_string()).unwrap();
    Command::new(env!("CARGO_BIN_EXE_vacq")).args(args).arg("--input").arg(&path).output().unwrap()
}

fn stdout(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn ex310_d2() -> Value {
    json!({
        "kind": "cq",
        "meta": {"name": "D2"},
        "payload": {
            "g": {"n": 1, "xbar": ["0"], "components": [{"1": "1"}, {"2": "-1"}]},
            "D": {"dim": 2, "pieces": [{"A": [["1", "0"], ["0", "-1"]], "b": ["0", "0"]}]}
        }
    })
}

#[test]
fn selftest_passes() {
    let o = Command::new(env!("CARGO_BIN_EXE_vacq")).arg("selftest").output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let v = stdout(&o);
    assert_eq!(v["passed"], v["total"]);
}

#[test]
fn two_regularity_certificate_from_the_command_line() {
    let o = vacq(&["cq", "--direction", "-1", "--mode", "two_regularity_dual"], &ex310_d2());
    assert_eq!(o.status.code(), Some(0));
    let v = &stdout(&o)["verdicts"][0];
    assert_eq!(v["status"], "fails");
    assert_eq!(v["certificate"]["multipliers"]["y"], json!(["0", "-1"]));
    assert_eq!(v["certificate"]["multipliers"]["z"], json!(["2", "0"]));
    assert_eq!(v["certificate"]["verified"], true);
}

#[test]
fn output_is_byte_identical() {
    let a = vacq(&["cq", "--direction", "-1"], &ex310_d2());
    let b = vacq(&["cq", "--direction", "-1"], &ex310_d2());
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}

#[test]
fn floats_are_refused_with_a_pointer() {
    let mut p = ex310_d2();
    p["payload"]["D"]["pieces"][0]["b"][1] = json!(0.5);
    let o = vacq(&["cq", "--direction", "-1"], &p);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/payload/D/pieces/0/b/1"));
}

#[test]
fn schema_errors_name_the_path() {
    let mut p = ex310_d2();
    p["payload"]["g"]["components"][1] = json!({"2": "x/y"});
    let o = vacq(&["cq", "--direction", "-1"], &p);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/payload/g/components/1"));
    let o = vacq(&["mpcc", "--direction", "1"], &ex310_d2());
    assert_eq!(o.status.code(), Some(2));
    let o = vacq(&["cq", "--direction", "0"], &ex310_d2());
    assert_eq!(o.status.code(), Some(2));
    let o = vacq(&["cq", "--mode", "nonsense"], &ex310_d2());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn inconclusive_only_exits_three() {
    // G = x, H = x² at 0 with u = −1: G leaves R₊ to first order
    let p = json!({
        "kind": "mpcc",
        "payload": {
            "G": {"n": 1, "xbar": ["0"], "components": [{"1": "1"}]},
            "H": {"n": 1, "xbar": ["0"], "components": [{"2": "1"}]}
        }
    });
    let o = vacq(&["mpcc", "--direction", "-1"], &p);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stdout(&o)["cq34"]["status"], "inconclusive");
}

#[test]
fn emitted_certificate_round_trips() {
    // feed the certificate back as a d2 query: y* from the witness is a normal to D at 0
    let o = vacq(&["cq", "--direction", "-1", "--mode", "two_regularity_dual"], &ex310_d2());
    let y = stdout(&o)["verdicts"][0]["certificate"]["multipliers"]["y"].clone();
    let cones = json!({
        "kind": "cones",
        "payload": {"set": ex310_d2()["payload"]["D"].clone(), "x": ["0", "0"]}
    });
    let o = vacq(&["cones"], &cones);
    let n = stdout(&o)["regular_normal"]["pieces"][0].clone();
    let a = n["A"].as_array().cloned().unwrap_or_default();
    let y: Vec<i64> = y.as_array().unwrap().iter().map(|s| s.as_str().unwrap().parse().unwrap()).collect();
    for row in a {
        let r: Vec<i64> = row.as_array().unwrap().iter().map(|s| s.as_str().unwrap().parse().unwrap()).collect();
        assert!(r[0] * y[0] + r[1] * y[1] <= 0);
    }
}

#[test]
fn witness_csv_trace() {
    let dir = std::env::temp_dir().join(format!("vacq-csv-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let case: Value = serde_json::from_str(include_str!("../golden/ex5_3_strong_witness.json")).unwrap();
    let input = dir.join("in.json");
    let csv = dir.join("trace.csv");
    std::fs::write(&input, case["input"].to_string()).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_vacq"))
        .args(["witness", "--direction", "1", "--mode", "strong", "--input"])
        .arg(&input)
        .arg("--csv")
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("k,x1,y1,lambda_norm,ystar1\n"));
    assert_eq!(text.lines().count(), 61);
}

#[test]
fn sdp_is_seeded() {
    let p = json!({
        "kind": "sdp",
        "meta": {"seed": 7},
        "payload": {"m": 2, "g0": [0, 0, 0], "jac": [[0, 0, 0]], "hess": [[[2, 0, -2]]], "u": [1.0], "budget": 2000}
    });
    let a = vacq(&["sdp"], &p);
    let b = vacq(&["sdp", "--seed", "7"], &p);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a)["falsifier"]["cq"].is_string());
}

#[test]
fn penalization_run() {
    let p = json!({
        "kind": "penalize",
        "payload": {
            "phi": {"1": "-1"},
            "g": {"n": 1, "xbar": ["0"], "components": [{"2": "1"}]},
            "D": {"dim": 1, "pieces": [{"A": [["1"]], "b": ["0"]}]},
            "ks": [10, 100, 1000, 10000],
            "grid": {"lo": ["-2"], "hi": ["2"], "resolution": 40, "depth": 12, "max_evals": 100000}
        }
    });
    let o = vacq(&["penalize"], &p);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout(&o);
    assert_eq!(v["classification"]["class"], "diverging_multipliers");
    assert_eq!(v["steps"].as_array().unwrap().len(), 4);
}
