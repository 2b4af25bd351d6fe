use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../asymlab/examples/data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asymlab")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path(name: &str) -> String {
    data(name).display().to_string()
}

#[test]
fn identity_limit_is_identity() {
    let out = run(&["cesaro", "--input", &path("identity.json")]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["pass"], true);
    let a = &r["limit"]["data"];
    let expected = [1.0, 0.0, 0.0, 1.0];
    for (i, e) in expected.iter().enumerate() {
        assert!((a[i][0].as_f64().unwrap() - e).abs() < 1e-12);
        assert!(a[i][1].as_f64().unwrap().abs() < 1e-12);
    }
}

#[test]
fn cesaro_csv_dumps_eigenvalues() {
    let out = run(&["cesaro", "--input", &path("jordan_rotation.json"), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,eigenvalue"));
    let eigs: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    // Peripheral projection onto v = (1/(i − 1/2), 1) along e₁ gives |v|² = 1.8; e₃ contributes 1.
    let expected = [0.0, 1.0, 1.8];
    assert_eq!(eigs.len(), 3);
    for (e, x) in expected.iter().zip(&eigs) {
        assert!((e - x).abs() < 1e-9, "{eigs:?}");
    }
}

#[test]
fn repro_three_by_three() {
    let out = run(&["repro", "--scenario", "ch3_3x3_counterexample"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["scenario"], "ch3_3x3_counterexample");
    assert_eq!(r["pass"], true);
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["provenance"].is_string()));
}

#[test]
fn tree_analyze_fig2() {
    let out = run(&["tree", "--analyze", &path("fig2.json")]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["analysis"]["corank"], 1);
    assert_eq!(r["analysis"]["branching_index"], 1);
    assert_eq!(r["analysis"]["rooted"], false);
}

#[test]
fn tree_asymptote_row_sums() {
    let out = run(&["tree", "--asymptote", &path("binary_depth2.json")]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let alpha = &r["asymptote"]["isometric"]["alpha_core"];
    // Root: (1/2)(α_a + α_b) with α_a = (0 + 1)/2 and α_b = (1/2 + 0)/2.
    assert!((alpha[0][1]["value"].as_f64().unwrap() - 0.375).abs() < 1e-12);
}

#[test]
fn construct_round_trip() {
    for args in [&["construct", "--values", "2,2/3"][..], &["construct", "--values", "4", "--stable-dim", "1"]] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        assert_eq!(json(&out)["pass"], true);
    }
}

#[test]
fn construct_rejects_bad_trace() {
    let out = run(&["construct", "--values", "1,2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn commutant_kernel_nontrivial() {
    let out = run(&["commutant", "--input", &path("triple.json")]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["report"]["kernel_dimension"], 1);
    assert_eq!(r["report"]["contraction_flag"], true);
}

#[test]
fn lazy_weighted_shift() {
    let out = run(&[
        "lazy",
        "--weights",
        &path("harmonic_weights.json"),
        "--vector",
        r#"[[{"Nat":1},[1,0]]]"#,
        "--power",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    // (1/2)(2/3)(3/4) e₄.
    assert_eq!(r["image"][0][0]["Nat"], 4);
    assert!((r["image"][0][1][0].as_f64().unwrap() - 0.25).abs() < 1e-15);
}

#[test]
fn lazy_universe_violation_is_input_error() {
    let out = run(&["lazy", "--op", "ch5_counterexample:T00", "--vector", r#"[[{"Pair":[1,0]},[1,0]]]"#]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cyclic_vector_certificates() {
    let out = run(&["tree", "--cyclic-vector", "--truncation", "2000", "--depth", "12"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let certs = r["cyclic_vector"]["vector"]["certificates"].as_array().unwrap();
    assert_eq!(certs.len(), 12);
    for (i, c) in certs.iter().enumerate() {
        assert!(c.as_f64().unwrap() <= 0.5_f64.powi(i as i32 + 1));
    }
}

#[test]
fn non_power_bounded_fails_check() {
    let dir = std::env::temp_dir().join(format!("asymlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let input = dir.join("jordan.json");
    std::fs::write(&input, r#"{"rows":2,"cols":2,"data":[[1,0],[1,0],[0,0],[1,0]]}"#).unwrap();
    let out = run(&["cesaro", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn input_errors_exit_two() {
    assert_eq!(run(&["cesaro", "--input", "/nonexistent/m.json"]).status.code(), Some(2));
    assert_eq!(run(&["repro", "--scenario", "no_such_scenario"]).status.code(), Some(2));
    assert_eq!(run(&["--tol=-1", "repro", "--list"]).status.code(), Some(2));
    assert_eq!(run(&["repro", "--bogus"]).status.code(), Some(2));
}

#[test]
fn output_file_is_deterministic() {
    let dir = std::env::temp_dir().join(format!("asymlab-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (a, b) = (dir.join("a.json"), dir.join("b.json"));
    for p in [&a, &b] {
        let out = run(&["repro", "--scenario", "ch6_tree_invariants", "--seed", "7", "--output", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn registry_listing() {
    let out = run(&["repro", "--list"]);
    let ids: Vec<String> =
        json(&out)["scenarios"].as_array().unwrap().iter().map(|s| s["id"].as_str().unwrap().to_string()).collect();
    for id in ["ch2_coincidence_pair", "ch5_counterexample", "ch6_binary_tree_cnu"] {
        assert!(ids.iter().any(|x| x == id), "{id}");
    }
}
