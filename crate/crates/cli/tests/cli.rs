use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use qvzne::transpile::{enumerate_subgraph_classes, CouplingGraph};

fn qvzne(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qvzne")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = qvzne(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("config.json");
    let cfg = r#"{"n": 3, "num_circuits": 4, "lambdas": [1, 1.5], "layout": {"kind": "line"},
        "noise": {"p2": 0.02}, "bootstrap_resamples": 20, "base_seed": 7}"#;
    std::fs::write(&path, cfg).unwrap();
    path.to_str().unwrap().to_owned()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn gen_is_deterministic_and_parses(n in 2usize..5, seed in 0u64..1000) {
        let args = ["gen", "--n", &n.to_string(), "--seed", &seed.to_string()];
        let first = ok(&args);
        prop_assert_eq!(&first, &ok(&args));
        let circuit = qvzne::qasm_import(&first).unwrap();
        prop_assert_eq!(circuit.n_qubits(), n);
    }
}

#[test]
fn transpile_then_fold_writes_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("qv.qasm");
    std::fs::write(&src, ok(&["gen", "--n", "4", "--seed", "1"])).unwrap();
    let routed = dir.path().join("routed.qasm");
    ok(&["transpile", src.to_str().unwrap(), "--layout", "line", "--out", routed.to_str().unwrap()]);
    let out_dir = dir.path().join("folds");
    let od = out_dir.to_str().unwrap();
    ok(&["fold", routed.to_str().unwrap(), "--lambda", "2", "--out-dir", od]);
    ok(&["fold", routed.to_str().unwrap(), "--lambda", "1.5", "--mode", "local", "--instances", "3", "--out-dir", od]);
    for stem in ["global", "local_0", "local_1", "local_2"] {
        let text = std::fs::read_to_string(out_dir.join(format!("{stem}.qasm"))).unwrap();
        qvzne::qasm_import(&text).unwrap();
        let side: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out_dir.join(format!("{stem}.json"))).unwrap()).unwrap();
        assert!(side["k"].as_u64().unwrap() > 0);
    }
}

#[test]
fn subgraphs_matches_library() {
    let listing: serde_json::Value = serde_json::from_str(&ok(&["subgraphs", "--n", "4"])).unwrap();
    let expected = enumerate_subgraph_classes(&CouplingGraph::heavy_hex_27(), 4).unwrap();
    assert_eq!(listing.as_array().unwrap().len(), expected.len());
}

#[test]
fn run_analyze_and_ingest_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let runs = dir.path().join("runs");
    let summary = ok(&["run", &cfg, "--out", runs.to_str().unwrap()]);
    let run_dir = std::fs::read_dir(&runs).unwrap().next().unwrap().unwrap().path();
    let records = run_dir.join("records.jsonl");
    let counts = run_dir.join("counts.jsonl");
    assert_eq!(ok(&["analyze", &cfg, records.to_str().unwrap()]), summary);
    let ingested = dir.path().join("ingested");
    let again = ok(&[
        "ingest",
        &cfg,
        counts.to_str().unwrap(),
        "--records",
        records.to_str().unwrap(),
        "--out",
        ingested.to_str().unwrap(),
    ]);
    assert_eq!(again, summary);
    for f in ["records.jsonl", "summary.json", "cumulative.csv", "cumulative.svg"] {
        assert!(ingested.join(f).exists(), "{f} missing");
    }
    // A second run resumes from the same directory and reports the same summary.
    assert_eq!(ok(&["run", &cfg, "--out", runs.to_str().unwrap()]), summary);
}

#[test]
fn bad_arguments_fail() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("qv.qasm");
    std::fs::write(&src, ok(&["gen", "--n", "3"])).unwrap();
    assert!(!qvzne(&["transpile", src.to_str().unwrap(), "--layout", "heavy-hex:x"]).status.success());
    assert!(!qvzne(&["search", "unused.json", "--n-min", "5", "--n-max", "3"]).status.success());
    assert!(!qvzne(&["gen", "--n", "1"]).status.success());
}
