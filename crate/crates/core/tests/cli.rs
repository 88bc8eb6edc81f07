use std::path::{Path, PathBuf};

use serde_json::Value;

use bigframe::gallery;
use bigframe::spec_io::{self, FrameSpec};

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["bigframe"];
    full.extend_from_slice(args);
    let code = bigframe::cli::run_with(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn example(dir: &Path) -> PathBuf {
    let (sys, k) = gallery::example_6_3();
    let p = dir.join("ex.json");
    std::fs::write(&p, spec_io::save_system(&FrameSpec::new(sys).with_k(k))).unwrap();
    p
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn analyze_example() {
    let dir = tempfile::tempdir().unwrap();
    let spec = example(dir.path());
    let out = dir.path().join("r.json");
    let (code, table, _) = run(&["analyze", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{table}");
    let r = report(&out);
    assert_eq!(r["status"], "pass");
    assert_eq!(r["bounds"]["lower"], 3.0);
    assert_eq!(r["bounds"]["upper"], 6.0);
    assert_eq!(r["S"][0][0], serde_json::json!([4.0, 0.0]));
    assert!(table.contains("lower bound A"));
}

#[test]
fn reconstruct_basis_vector() {
    let dir = tempfile::tempdir().unwrap();
    let spec = example(dir.path());
    let out = dir.path().join("r.json");
    let (code, _, _) = run(&["reconstruct", spec.to_str().unwrap(), "--vector", "e1", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let r = report(&out);
    assert_eq!(r["f1"], serde_json::json!([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]));
    assert!(r["res1"].as_f64().unwrap() <= 1e-12);

    let (code, _, err) = run(&["reconstruct", spec.to_str().unwrap(), "--vector", "1,2"]);
    assert_eq!(code, 2);
    assert!(err.contains("DimMismatch"));
}

#[test]
fn missing_file_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let missing = dir.path().join("nope.json");
    let (code, _, err) = run(&["bounds", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("SchemaError"));
    assert_eq!(report(&out)["errors"][0]["code"], "SchemaError");
}

#[test]
fn singular_system_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.json");
    std::fs::write(
        &p,
        r#"{"dim": 2, "atoms": [{"id": 0, "weight": 1, "phi": [[[1,0],[0,0]]], "psi": [[[1,0],[0,0]]]}]}"#,
    )
    .unwrap();
    let (code, _, err) = run(&["dual", p.to_str().unwrap()]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn gen_then_verify_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("g.json");
    let (code, _, _) = run(&[
        "gen",
        "random",
        "--dim",
        "4",
        "--atoms",
        "7",
        "--codims",
        "1,2",
        "--ensure-frame",
        "--seed",
        "3",
        "--out",
        spec.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let (_, a, _) = run(&["verify", spec.to_str().unwrap(), "--seed", "42"]);
    let (_, b, _) = run(&["verify", spec.to_str().unwrap(), "--seed", "42"]);
    assert_eq!(a, b);
    assert!(a.contains("PASS"));

    let (code, text, _) = run(&["gen", "tight", "--dim", "3", "--rank", "2", "--a", "2"]);
    assert_eq!(code, 0);
    let back = spec_io::load_system(&text).unwrap();
    assert!(back.k.is_some());
}

#[test]
fn perturb_requires_variant_and_checks_hypothesis() {
    let dir = tempfile::tempdir().unwrap();
    let spec = example(dir.path());
    let s = spec.to_str().unwrap();
    let (code, _, err) = run(&["perturb", s, s]);
    assert_eq!(code, 2);
    assert!(err.contains("BadInputs"));
    let (code, table, _) = run(&["perturb", s, s, "--variant", "t81", "--alpha", "0.1"]);
    assert_eq!(code, 0, "{table}");
}

#[test]
fn transform_emits_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = example(dir.path());
    let op = dir.path().join("t.json");
    std::fs::write(&op, "[[[1,0],[0,0],[0,0]],[[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0]]]").unwrap();
    let emitted = dir.path().join("d.json");
    let (code, table, _) = run(&[
        "transform",
        spec.to_str().unwrap(),
        "--mode",
        "dilate",
        "--op",
        op.to_str().unwrap(),
        "--emit",
        emitted.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{table}");
    let d = spec_io::load_system(&std::fs::read_to_string(&emitted).unwrap()).unwrap();
    let s = bigframe::frame_op::frame_operator(&d.system).s.into_matrix();
    assert_eq!(s, bigframe::linalg::real_diag(&[16.0, 3.0, 6.0]));
}
