use std::process::{Command, Output};

use serde_json::Value;

fn qkz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkz"))
        .args(args)
        .env_remove("QKZ_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn rmatrix_gl2_vector_square_has_three_blocks() {
    let o = qkz(&["rmatrix", "--n", "2", "--v1", "vector", "--v2", "vector"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["blocks"].as_array().unwrap().len(), 3);
    assert_eq!(v["poles"], serde_json::json!(["-1/1"]));
    assert!(String::from_utf8_lossy(&o.stderr).contains("poles: [-1]"));
}

#[test]
fn rmatrix_gl1_is_a_single_unit_block() {
    let o = qkz(&["rmatrix", "--n", "1", "--v1", "vector", "--v2", "vector"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    let blocks = v["blocks"].as_array().unwrap();
    assert_eq!(blocks.len(), 1);
    let e = &blocks[0]["entries"][0][0];
    assert_eq!(e["num"], serde_json::json!(["1/1"]));
    assert_eq!(e["den"], serde_json::json!(["1/1"]));
}

#[test]
fn invalid_descriptor_is_a_usage_error() {
    let o = qkz(&["rmatrix", "--n", "2", "--v1", "spinor", "--v2", "vector"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("spinor"));
    assert_eq!(code(&qkz(&["rmatrix", "--n", "2"])), 2);
    assert_eq!(code(&qkz(&["frobnicate"])), 2);
}

#[test]
fn help_documents_every_flag() {
    let cases: [(&str, &[&str]); 4] = [
        ("rmatrix", &["--n", "--v1", "--v2", "--out", "--format"]),
        ("operators", &["--n", "--factor", "--z", "--lambda", "--p", "--kind", "--index", "--wrt", "--mutate", "--out", "--format"]),
        ("verify", &["--config", "--seed", "--no-timing", "--out", "--format", "QKZ_SEED"]),
        (
            "flow",
            &["--n", "--factor", "--z", "--lambda", "--p", "--i", "--a", "--lambda-target", "--tol", "--max-defect", "--u", "--log", "--out", "--format"],
        ),
    ];
    for (sub, flags) in cases {
        let o = qkz(&[sub, "--help"]);
        assert_eq!(code(&o), 0, "{sub}");
        let text = String::from_utf8_lossy(&o.stdout);
        for f in flags {
            assert!(text.contains(f), "{sub} --help lacks {f}");
        }
    }
    assert_eq!(code(&qkz(&["--help"])), 0);
}

#[test]
fn operators_dump_k_at_a_point() {
    let o = qkz(&[
        "operators", "--n", "2", "--factor", "vector", "--factor", "vector", "--kind", "k", "--index", "2", "--z", "0,1",
        "--lambda", "2,3", "--p", "1",
    ]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["formula"], "K_2");
    // (2 + P)/3 · diag(2, 3, 2, 3)
    assert_eq!(v["matrix"][1], serde_json::json!(["0/1", "2/1", "2/3", "0/1"]));
    assert_eq!(v["matrix"][3][3], "3/1");
}

#[test]
fn operators_reject_points_at_poles() {
    // K_1 at z = (0, 1), p = 1 needs R(-1)
    let o = qkz(&[
        "operators", "--n", "2", "--factor", "vector", "--factor", "vector", "--kind", "k", "--index", "1", "--z", "0,1",
        "--lambda", "2,3", "--p", "1",
    ]);
    assert_eq!(code(&o), 2);
    let o = qkz(&["operators", "--n", "2", "--factor", "vector", "--kind", "l", "--index", "1", "--lambda", "2,2"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_default_matrix_passes_and_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let o = qkz(&["verify", "--no-timing", "--out", path.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let v: Value = serde_json::from_slice(&ta).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["elapsed_ms"], 0);
    assert_eq!(v["suites"].as_array().unwrap().len(), 45);
}

#[test]
fn verify_seed_comes_from_flag_or_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"factors": [{"kind": "vector", "N": 2}], "suites": ["qkz", "weyl"], "samples": 2}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let flag = stdout_json(&qkz(&["verify", "--config", c, "--seed", "11", "--no-timing"]));
    let env = Command::new(env!("CARGO_BIN_EXE_qkz"))
        .args(["verify", "--config", c, "--no-timing"])
        .env("QKZ_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(flag["seed"], 11);
    assert_eq!(stdout_json(&env), flag);
}

#[test]
fn verify_mutation_fails_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("m.json");
    std::fs::write(
        &cfg,
        r#"{"factors": [{"kind": "vector", "N": 2}, {"kind": "vector", "N": 2}],
            "suites": ["flat", "compatibility", "weyl"], "samples": 3,
            "mutation": {"term": "shift", "index": 1}}"#,
    )
    .unwrap();
    let o = qkz(&["verify", "--config", cfg.to_str().unwrap(), "--no-timing"]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout_json(&o)["pass"], false);
}

#[test]
fn verify_config_errors_exit_2() {
    let o = qkz(&["verify", "--config", "/definitely/not/here.json"]);
    assert_eq!(code(&o), 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"factors": [{"kind": "vector", "N": 2}], "flow": {"tol": 1e-9, "maxdefect": 1}}"#).unwrap();
    let o = qkz(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("flow.maxdefect"), "{err}");
}

#[test]
fn flow_gl1_demo_is_at_roundoff() {
    let o = qkz(&["flow", "--n", "1", "--factor", "vector", "--factor", "sym:2", "--z", "0.2,-0.7", "--lambda", "1.3", "--lambda-target", "2.2", "--tol", "1e-12"]);
    assert_eq!(code(&o), 0);
    assert!(stdout_json(&o)["defect"].as_f64().unwrap() < 1e-9);
}

#[test]
fn flow_gl2_demo_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("t.jsonl");
    let o = qkz(&["flow", "--n", "2", "--factor", "vector", "--factor", "vector", "--tol", "1e-10", "--log", log.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    let d = v["defect"].as_f64().unwrap();
    assert!(d < 1e-6 && v["pass"] == true);
    let text = std::fs::read_to_string(&log).unwrap();
    let last: Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(last["defect"].as_f64().unwrap(), d);
}

#[test]
fn flow_through_zero_is_rejected() {
    let o = qkz(&["flow", "--n", "2", "--factor", "vector", "--factor", "vector", "--lambda-target", "-1"]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("crosses the pole at 0"), "{err}");
}

#[test]
fn pretty_and_compact_formats_agree() {
    let args = ["rmatrix", "--n", "2", "--v1", "vector", "--v2", "sym:2"];
    let compact = qkz(&args);
    let pretty = qkz(&[&args[..], &["--format", "pretty"]].concat());
    assert_eq!(stdout_json(&compact), stdout_json(&pretty));
    assert!(pretty.stdout.len() > compact.stdout.len());
}
