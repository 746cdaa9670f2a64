use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).to_string_lossy().into_owned()
}

fn rmdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmdp")).args(args).env_remove("RMDP_THREADS").output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn solve_m1(extra: &[&str]) -> Value {
    let m1 = data("m1.json");
    let mut args = vec!["solve", "--model", &m1, "--objective", "reach-reward", "--target", "g"];
    args.extend_from_slice(extra);
    json(&rmdp(&args))
}

#[test]
fn m1_robust_and_optimistic_values() {
    let robust = solve_m1(&["--epsilon", "1e-10"]);
    let v = robust["values"]["s"].as_f64().unwrap();
    assert!((v - 10.0 / 7.0).abs() < 1e-6, "{v}");
    assert_eq!(robust["values"]["g"], 0.0);
    assert_eq!(robust["mode"], "robust");
    assert_eq!(robust["method"], "vi");
    assert_eq!(robust["converged"], true);
    assert_eq!(robust["tool_version"], "rmdp 0.1.0");
    assert_eq!(robust["model_hash"].as_str().unwrap().len(), 64);

    let optimistic = solve_m1(&["--mode", "optimistic", "--epsilon", "1e-10"]);
    let v = optimistic["values"]["s"].as_f64().unwrap();
    assert!((v - 10.0 / 3.0).abs() < 1e-6, "{v}");
}

#[test]
fn policy_iteration_agrees_with_value_iteration() {
    let vi = solve_m1(&["--epsilon", "1e-9"]);
    let pi = solve_m1(&["--method", "pi", "--epsilon", "1e-9"]);
    assert_eq!(pi["method"], "pi");
    let a = vi["values"]["s"].as_f64().unwrap();
    let b = pi["values"]["s"].as_f64().unwrap();
    assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    assert_eq!(vi["policy"], pi["policy"]);
}

#[test]
fn nominal_mode_on_point_model() {
    let coin = data("coin_mdp.json");
    let out =
        json(&rmdp(&["solve", "--model", &coin, "--objective", "reach-reward", "--target", "g", "--mode", "nominal"]));
    assert!((out["values"]["s"].as_f64().unwrap() - 2.0).abs() < 1e-5);
}

#[test]
fn discounted_and_reachability_objectives() {
    let m1 = data("m1.json");
    let disc =
        json(&rmdp(&["solve", "--model", &m1, "--objective", "discounted", "--discount", "0.5", "--epsilon", "1e-10"]));
    // Robust nature keeps only mass 0.3 on the rewarding state: v = 1 / (1 - 0.5 * 0.3).
    let v = disc["values"]["s"].as_f64().unwrap();
    assert!((v - 1.0 / 0.85).abs() < 1e-6, "{v}");
    assert_eq!(disc["objective"]["gamma"], 0.5);

    let reach = json(&rmdp(&["solve", "--model", &m1, "--objective", "reachability", "--target", "g"]));
    assert!((reach["values"]["s"].as_f64().unwrap() - 1.0).abs() < 1e-5);
}

#[test]
fn flag_conflicts_exit_with_usage_error() {
    let m1 = data("m1.json");
    let cases: Vec<Vec<&str>> = vec![
        vec!["solve", "--model", &m1, "--objective", "reach-reward", "--target", "g", "--discount", "0.9"],
        vec!["solve", "--model", &m1, "--objective", "reach-reward"],
        vec!["solve", "--model", &m1, "--objective", "discounted", "--discount", "0.9", "--target", "g"],
        vec!["solve", "--model", &m1, "--objective", "discounted"],
        vec!["solve", "--model", &m1, "--objective", "discounted", "--discount", "1.5"],
        vec!["solve", "--model", &m1, "--objective", "reach-reward", "--target", "nowhere"],
        vec!["solve", "--model", &m1, "--objective", "reach-reward", "--target", "g", "--epsilon", "0"],
        vec!["solve", "--model", &m1, "--objective", "reach-reward", "--target", "g", "--mode", "sideways"],
    ];
    for args in cases {
        assert_eq!(code(&rmdp(&args)), 2, "{args:?}");
    }
}

#[test]
fn missing_file_exits_with_io_error() {
    let out = rmdp(&["solve", "--model", "/nonexistent/model.json", "--objective", "discounted", "--discount", "0.9"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read"));
}

#[test]
fn malformed_documents_exit_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "").unwrap();
    let out = rmdp(&["solve", "--model", empty.to_str().unwrap(), "--objective", "discounted", "--discount", "0.9"]);
    assert_eq!(code(&out), 2);

    let out = rmdp(&["solve", "--model", &data("infeasible.json"), "--objective", "reach-reward", "--target", "g"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("interval-infeasible"));
}

#[test]
fn iteration_limit_exits_with_code_four_and_still_writes_output() {
    let out = rmdp(&[
        "solve",
        "--model",
        &data("m1.json"),
        "--objective",
        "reach-reward",
        "--target",
        "g",
        "--max-iter",
        "3",
    ]);
    assert_eq!(code(&out), 4);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["converged"], false);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn fixed_policy_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let policy = dir.path().join("policy.json");
    std::fs::write(&policy, r#"{"s": "a", "g": "a"}"#).unwrap();
    let m1 = data("m1.json");
    let p = policy.to_str().unwrap();
    let out = json(&rmdp(&[
        "solve",
        "--model",
        &m1,
        "--objective",
        "reach-reward",
        "--target",
        "g",
        "--policy",
        p,
        "--epsilon",
        "1e-10",
    ]));
    assert_eq!(out["method"], "evaluate");
    assert!((out["values"]["s"].as_f64().unwrap() - 10.0 / 7.0).abs() < 1e-6);

    let with_pi = rmdp(&[
        "solve",
        "--model",
        &m1,
        "--objective",
        "reach-reward",
        "--target",
        "g",
        "--policy",
        p,
        "--method",
        "pi",
    ]);
    assert_eq!(code(&with_pi), 2);

    std::fs::write(&policy, r#"{"s": "a"}"#).unwrap();
    let partial = rmdp(&["solve", "--model", &m1, "--objective", "reach-reward", "--target", "g", "--policy", p]);
    assert_eq!(code(&partial), 2);
}

#[test]
fn memdp_solve_and_evaluate() {
    let memdp = data("memdp.json");
    let best = json(&rmdp(&["solve", "--model", &memdp, "--objective", "reach-reward", "--target", "g"]));
    assert_eq!(best["method"], "enumerate");
    assert_eq!(best["policy"]["s"], "b");
    assert!((best["values"]["s"].as_f64().unwrap() - 3.0).abs() < 1e-9);

    let dir = tempfile::tempdir().unwrap();
    let policy = dir.path().join("policy.json");
    std::fs::write(&policy, r#"{"s": "a", "g": "a"}"#).unwrap();
    let p = policy.to_str().unwrap();
    let eval =
        json(&rmdp(&["solve", "--model", &memdp, "--objective", "reach-reward", "--target", "g", "--policy", p]));
    assert_eq!(eval["method"], "exact");
    assert_eq!(eval["metadata"]["worst_environment"], 0);
    assert!((eval["values"]["s"].as_f64().unwrap() - 1.0 / 0.7).abs() < 1e-9);

    let optimistic =
        rmdp(&["solve", "--model", &memdp, "--objective", "reach-reward", "--target", "g", "--mode", "optimistic"]);
    assert_eq!(code(&optimistic), 2);
    let pi = rmdp(&["solve", "--model", &memdp, "--objective", "reach-reward", "--target", "g", "--method", "pi"]);
    assert_eq!(code(&pi), 2);
}

#[test]
fn output_flag_writes_file_instead_of_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("result.json");
    let out = rmdp(&[
        "solve",
        "--model",
        &data("m1.json"),
        "--objective",
        "reach-reward",
        "--target",
        "g",
        "--output",
        target.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert!(doc["values"]["s"].is_number());

    let unwritable = rmdp(&[
        "solve",
        "--model",
        &data("m1.json"),
        "--objective",
        "reach-reward",
        "--target",
        "g",
        "--output",
        "/nonexistent/dir/result.json",
    ]);
    assert_eq!(code(&unwritable), 3);
}

#[test]
fn infinite_values_are_written_as_inf() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("loop.json");
    std::fs::write(
        &model,
        r#"{"kind": "mdp", "states": ["s", "g"], "initial": "s", "actions": ["a"],
            "transitions": [{"from": "s", "action": "a", "to": "s", "p": 1.0},
                            {"from": "g", "action": "a", "to": "g", "p": 1.0}],
            "rewards": [{"state": "s", "action": "a", "value": 1.0},
                        {"state": "g", "action": "a", "value": 0.0}]}"#,
    )
    .unwrap();
    let out =
        json(&rmdp(&["solve", "--model", model.to_str().unwrap(), "--objective", "reach-reward", "--target", "g"]));
    assert_eq!(out["values"]["s"], "inf");
    assert_eq!(out["values"]["g"], 0.0);
}

#[test]
fn generate_is_deterministic_and_valid() {
    let args = ["generate", "--states", "12", "--actions", "3", "--kind", "imdp", "--seed", "42", "--density", "0.3"];
    let a = rmdp(&args);
    let b = rmdp(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let other =
        rmdp(&["generate", "--states", "12", "--actions", "3", "--kind", "imdp", "--seed", "43", "--density", "0.3"]);
    assert_ne!(a.stdout, other.stdout);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gen.json");
    std::fs::write(&path, &a.stdout).unwrap();
    let solved = rmdp(&["solve", "--model", path.to_str().unwrap(), "--objective", "discounted", "--discount", "0.9"]);
    assert_eq!(code(&solved), 0);
}

#[test]
fn generate_mdp_has_point_rows() {
    let doc =
        json(&rmdp(&["generate", "--states", "6", "--actions", "2", "--kind", "mdp", "--seed", "7", "--width", "0"]));
    assert_eq!(doc["kind"], "mdp");
    for t in doc["transitions"].as_array().unwrap() {
        assert!(t["p"].is_number());
        assert!(t.get("lower").is_none());
    }
}

#[test]
fn generate_rejects_bad_parameters() {
    assert_eq!(code(&rmdp(&["generate", "--states", "1", "--actions", "2", "--kind", "mdp", "--seed", "1"])), 2);
    assert_eq!(
        code(&rmdp(&["generate", "--states", "5", "--actions", "2", "--kind", "mdp", "--seed", "1", "--density", "0"])),
        2
    );
    assert_eq!(code(&rmdp(&["generate", "--states", "5", "--actions", "2", "--kind", "memdp", "--seed", "1"])), 2);
}

fn learn(truth: &str, samples: &str) -> Value {
    json(&rmdp(&[
        "learn",
        "--truth",
        &data(truth),
        "--samples",
        samples,
        "--delta",
        "0.05",
        "--seed",
        "3",
        "--objective",
        "reach-reward",
        "--target",
        "g",
    ]))
}

fn widest_interval(doc: &Value) -> f64 {
    doc["learned_model"]["transitions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["upper"].as_f64().unwrap() - t["lower"].as_f64().unwrap())
        .fold(0.0, f64::max)
}

#[test]
fn learn_intervals_narrow_with_more_samples() {
    let few = learn("coin_mdp.json", "100");
    let many = learn("coin_mdp.json", "10000");
    assert!(widest_interval(&many) < widest_interval(&few));
    assert_eq!(few["learned_model"]["kind"], "imdp");
    let meta = &many["result"]["metadata"];
    assert_eq!(meta["samples_per_pair"], 10000);
    assert_eq!(meta["transitions"], 3);
    assert!(meta["delta_prime"].as_f64().unwrap() < 0.05);
    // More data tightens the robust value towards the true expected reward of 2.
    let v_few = few["result"]["values"]["s"].as_f64().unwrap();
    let v_many = many["result"]["values"]["s"].as_f64().unwrap();
    assert!(v_few <= v_many && v_many <= 2.0 + 1e-6, "{v_few} {v_many}");
}

#[test]
fn learn_on_deterministic_truth_recovers_its_value() {
    let doc = learn("dirac_mdp.json", "20");
    assert!((doc["result"]["values"]["s"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn learn_requires_delta_and_a_point_truth() {
    let out = rmdp(&[
        "learn",
        "--truth",
        &data("coin_mdp.json"),
        "--samples",
        "10",
        "--seed",
        "1",
        "--objective",
        "reach-reward",
        "--target",
        "g",
    ]);
    assert_eq!(code(&out), 2);
    let out = rmdp(&[
        "learn",
        "--truth",
        &data("m1.json"),
        "--samples",
        "10",
        "--delta",
        "0.1",
        "--seed",
        "1",
        "--objective",
        "reach-reward",
        "--target",
        "g",
    ]);
    assert_eq!(code(&out), 2);
    let out = rmdp(&[
        "learn",
        "--truth",
        &data("coin_mdp.json"),
        "--samples",
        "10",
        "--delta",
        "1.5",
        "--seed",
        "1",
        "--objective",
        "reach-reward",
        "--target",
        "g",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn thread_count_does_not_change_results() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_rmdp"))
            .args(["solve", "--model", &data("m1.json"), "--objective", "reach-reward", "--target", "g"])
            .env("RMDP_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    let four = run("4");
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(code(&run("zero")), 2);
}
