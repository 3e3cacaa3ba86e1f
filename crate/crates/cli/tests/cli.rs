use std::path::PathBuf;
use std::process::Command as Process;
use std::sync::Arc;

use clap::Parser;
use serde_json::Value;

use monadic_cli::{run, Cli, EXIT_STRICT, EXIT_USAGE, VERSION};
use monadic_core::engine::{build_multiway_from, parse_rules};
use monadic_core::io::{graph_to_json, smatrix_to_json, SMatrixJson};
use monadic_core::smatrix::{
    build_smatrix, layer_system, solve_unitary_weights, Coupling, SolverOptions,
};
use monadic_core::strcore::{is_leibnizian, Alphabet, CanonMode, CyclicString};
use monadic_core::{MultiwayGraph, MultiwayOptions};

fn invoke(args: &[&str]) -> (String, i32) {
    let cli = Cli::try_parse_from(std::iter::once("monadic").chain(args.iter().copied())).unwrap();
    let out = run(&cli).unwrap();
    (out.artifact, out.exit_code)
}

fn invoke_json(args: &[&str]) -> Value {
    serde_json::from_str(&invoke(args).0).unwrap()
}

fn write_graph(dir: &tempfile::TempDir, name: &str, g: &MultiwayGraph) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, serde_json::to_string(&graph_to_json(g)).unwrap()).unwrap();
    path
}

fn ab() -> Arc<Alphabet> {
    Arc::new(Alphabet::new("AB".chars()).unwrap())
}

fn words(texts: &[&str]) -> Vec<CyclicString> {
    texts
        .iter()
        .map(|t| CyclicString::parse(ab(), t).unwrap())
        .collect()
}

#[test]
fn fractal_order_three() {
    let (out, code) = invoke(&["fractal", "--n", "3"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().last(), Some("ABAABBAAABBB"));
}

#[test]
fn analyze_examples() {
    let v = invoke_json(&["analyze", "AABABB"]);
    assert_eq!(v["result"]["leibnizian"], true);
    assert_eq!(v["result"]["variety"]["num"], 4);
    assert_eq!(v["result"]["variety"]["den"], 1);
    assert_eq!(
        v["result"]["a_vector"],
        serde_json::json!([2, 2, 1, 1, 2, 2])
    );
    let v = invoke_json(&["analyze", "AAABBB"]);
    assert_eq!(v["result"]["leibnizian"], false);
    assert_eq!(v["result"]["variety"]["num"], 0);
    assert_eq!(v["result"]["variety"]["den"], 1);
}

#[test]
fn usage_errors_exit_with_two() {
    let cli = Cli::try_parse_from(["monadic", "analyze", ""]).unwrap();
    assert_eq!(run(&cli).unwrap_err().exit_code(), EXIT_USAGE);
    let cli = Cli::try_parse_from(["monadic", "--alphabet", "AB", "analyze", "ABXA"]).unwrap();
    let err = run(&cli).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_USAGE);
    assert!(err.to_string().contains("position 2"));
    let cli = Cli::try_parse_from(["monadic", "--format", "dot", "fractal", "--n", "2"]).unwrap();
    assert_eq!(run(&cli).unwrap_err().exit_code(), EXIT_USAGE);
    let bin = env!("CARGO_BIN_EXE_monadic");
    assert_eq!(
        Process::new(bin)
            .args(["analyze", ""])
            .output()
            .unwrap()
            .status
            .code(),
        Some(EXIT_USAGE)
    );
    assert_eq!(
        Process::new(bin)
            .args(["fractal"])
            .output()
            .unwrap()
            .status
            .code(),
        Some(EXIT_USAGE)
    );
}

#[test]
fn artifacts_embed_config_and_version() {
    let v = invoke_json(&["--seed", "5", "--k", "2.5", "analyze", "AABABB"]);
    assert_eq!(v["version"], VERSION);
    assert_eq!(v["config"]["seed"], 5);
    assert_eq!(v["config"]["k"], 2.5);
    for args in [
        &["fractal", "--n", "2"][..],
        &["stats", "--length", "8"],
        &["corr", "--samples", "40"],
    ] {
        let (out, _) = invoke(args);
        let first = out.lines().next().unwrap();
        assert!(
            first.starts_with(&format!("# monadic-cli {VERSION} ")),
            "{first}"
        );
        assert!(first.contains("\"seed\":0"));
    }
}

#[test]
fn sorting_system_terminates_with_physical_flags() {
    let v = invoke_json(&[
        "--rule", "BA->AB", "--rule", "CB->BC", "multiway", "--init", "BBBAAACC", "--depth", "50",
    ]);
    let graph = &v["result"]["graph"];
    assert_eq!(graph["terminated"], true);
    assert_eq!(graph["truncated"], false);
    let abc = Arc::new(Alphabet::new("ABC".chars()).unwrap());
    for layer in graph["layers"].as_array().unwrap() {
        for node in layer.as_array().unwrap() {
            let s = CyclicString::parse(abc.clone(), node["string"].as_str().unwrap()).unwrap();
            assert_eq!(node["leibnizian"].as_bool().unwrap(), is_leibnizian(&s));
        }
    }
    let last = graph["layers"].as_array().unwrap().last().unwrap();
    assert_eq!(last[0]["string"], "AAABBBCC");
}

#[test]
fn single_rule_depth_four_has_one_maximal_path() {
    let v = invoke_json(&[
        "--rule",
        "BA->AB",
        "multiway",
        "--init",
        "AABAABBABAB",
        "--depth",
        "4",
    ]);
    let paths = v["result"]["maximal_paths"].as_array().unwrap();
    assert_eq!(paths.len(), 1);
    assert_eq!(paths[0]["nodes"], serde_json::json!([0, 1, 6, 12, 18]));
    assert_eq!(paths[0]["score"]["num"], 27);
    let dot = invoke(&[
        "--rule",
        "BA->AB",
        "--format",
        "dot",
        "multiway",
        "--init",
        "AABAABBABAB",
        "--depth",
        "4",
    ])
    .0;
    assert!(dot.starts_with("// monadic-cli"));
    assert!(dot.contains("digraph"));
}

#[test]
fn depth_zero_is_a_single_node() {
    let v = invoke_json(&[
        "--rule", "BA->AB", "multiway", "--init", "AABABB", "--depth", "0",
    ]);
    let layers = v["result"]["graph"]["layers"].as_array().unwrap();
    assert_eq!(layers.len(), 1);
    assert_eq!(layers[0].as_array().unwrap().len(), 1);
    assert_eq!(v["result"]["graph"]["events"].as_array().unwrap().len(), 0);
}

#[test]
fn truncation_is_flagged_under_strict() {
    let args = [
        "--rule",
        "BA->AB",
        "multiway",
        "--init",
        "AABAABBABAB",
        "--depth",
        "6",
        "--max-nodes",
        "5",
    ];
    assert_eq!(invoke(&args).1, 0);
    let strict: Vec<&str> = std::iter::once("--strict").chain(args).collect();
    assert_eq!(invoke(&strict).1, EXIT_STRICT);
}

#[test]
fn smatrix_from_saved_artifact_matches_in_process_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "--canon", "rotation", "--rule", "BA->AB", "--rule", "DC->CD", "--k", "1.3",
    ];
    let mut args: Vec<&str> = base.to_vec();
    args.extend([
        "multiway",
        "--init",
        "AABBDCABABDC",
        "--init",
        "ABABCDABABDC",
        "--depth",
        "1",
    ]);
    let artifact = dir.path().join("two_root.json");
    std::fs::write(&artifact, invoke(&args).0).unwrap();

    let path = artifact.to_str().unwrap();
    let v = invoke_json(&["--k", "1.3", "smatrix", "--graph", path, "--recognize"]);
    let from_file: SMatrixJson = serde_json::from_value(v["result"]["smatrix"].clone()).unwrap();
    assert_eq!(from_file.matches.len(), 1);
    assert_eq!(from_file.matches[0].gate, "H");

    let abcd = Arc::new(Alphabet::new("ABCD".chars()).unwrap());
    let roots: Vec<CyclicString> = ["AABBDCABABDC", "ABABCDABABDC"]
        .iter()
        .map(|t| CyclicString::parse(abcd.clone(), t).unwrap())
        .collect();
    let opts = MultiwayOptions {
        max_depth: Some(1),
        canon_mode: CanonMode::Rotation,
        ..Default::default()
    };
    let g =
        build_multiway_from(&roots, &parse_rules(&abcd, "BA->AB, DC->CD").unwrap(), opts).unwrap();
    let ls = layer_system(&g, 0, 1, true).unwrap();
    let outcome = solve_unitary_weights(&ls.connected, &SolverOptions::default());
    let spec = build_smatrix(&ls, outcome.weights(), Coupling::new(1.3, 1.0).unwrap()).unwrap();
    let direct = smatrix_to_json(&ls, &spec, &[]);
    assert_eq!(
        SMatrixJson {
            matches: Vec::new(),
            ..from_file
        },
        direct
    );
}

#[test]
fn permutation_graphs_give_cnot_and_swap() {
    let dir = tempfile::tempdir().unwrap();
    let six = words(&[
        "AABABB", "AABBAB", "ABAABB", "ABABBA", "ABBAAB", "ABBABA", "BAABAB", "BAABBA",
    ]);
    for (targets, gate) in [([0, 1, 3, 2], "CNOT"), ([0, 2, 1, 3], "SWAP")] {
        let edges: Vec<_> = targets
            .iter()
            .enumerate()
            .map(|(i, &j)| ((0, i), (1, j)))
            .collect();
        let g =
            MultiwayGraph::from_layers(ab(), vec![six[..4].to_vec(), six[4..].to_vec()], &edges)
                .unwrap();
        let file = write_graph(&dir, &format!("{gate}.json"), &g);
        let v = invoke_json(&["smatrix", "--graph", file.to_str().unwrap(), "--recognize"]);
        assert_eq!(v["result"]["feasible"], true);
        assert_eq!(v["result"]["method"], "permutation");
        let names: Vec<&str> = v["result"]["smatrix"]["matches"]
            .as_array()
            .unwrap()
            .iter()
            .map(|m| m["gate"].as_str().unwrap())
            .collect();
        assert!(names.contains(&gate), "{names:?}");
    }
}

#[test]
fn three_in_two_out_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let ins = words(&["AABABB", "AABBAB", "ABAABB"]);
    let outs = words(&["ABABBA", "ABBAAB"]);
    let edges: Vec<_> = (0..3)
        .flat_map(|i| (0..2).map(move |j| ((0, i), (1, j))))
        .collect();
    let g = MultiwayGraph::from_layers(ab(), vec![ins, outs], &edges).unwrap();
    let file = write_graph(&dir, "wide.json", &g);
    let path = file.to_str().unwrap();
    let (out, code) = invoke(&["smatrix", "--graph", path]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"]["feasible"], false);
    assert!(v["result"]["residual"].as_f64().unwrap() >= 1e-3);
    assert_eq!(
        invoke(&["--strict", "smatrix", "--graph", path]).1,
        EXIT_STRICT
    );
    let bin = env!("CARGO_BIN_EXE_monadic");
    assert_eq!(
        Process::new(bin)
            .args(["--strict", "smatrix", "--graph", path])
            .output()
            .unwrap()
            .status
            .code(),
        Some(EXIT_STRICT)
    );
}

#[test]
fn extension_restores_unitarity() {
    let dir = tempfile::tempdir().unwrap();
    let ins = words(&["AABABB", "AABBAB", "ABAABB", "ABABBA"]);
    let outs = words(&["ABBAAB", "ABBABA"]);
    let g =
        MultiwayGraph::from_layers(ab(), vec![ins, outs], &[((0, 0), (1, 0)), ((0, 3), (1, 1))])
            .unwrap();
    let file = write_graph(&dir, "narrow.json", &g);
    let path = file.to_str().unwrap();
    let v = invoke_json(&["smatrix", "--graph", path, "--extend", "2"]);
    assert_eq!(v["result"]["feasible"], false);
    assert_eq!(v["result"]["extension"]["feasible"], true);
    assert_eq!(v["result"]["extension"]["rows_needed"], 2);
    assert_eq!(
        v["result"]["extension"]["dense"].as_array().unwrap().len(),
        4
    );
}

#[test]
fn stats_sum_rule_and_corr_sign() {
    let v = invoke_json(&["--format", "json", "stats", "--length", "8"]);
    assert!((v["result"]["occupation_sum"].as_f64().unwrap() - 8.0).abs() < 1e-10);
    let csv = invoke(&["stats", "--length", "8"]).0;
    assert_eq!(
        csv.lines().nth(1),
        Some("view,radius,n_expected,fd_predicted,abs_dev")
    );
    let v = invoke_json(&["--format", "json", "corr", "--samples", "200"]);
    assert!(v["result"]["pearson"].as_f64().unwrap() > 0.0);
    assert_eq!(v["result"]["rows"].as_array().unwrap().len(), 200);
}

#[test]
fn identical_inputs_give_identical_bytes() {
    for args in [
        &["--seed", "3", "corr", "--samples", "60"][..],
        &[
            "--rule",
            "BA->AB",
            "multiway",
            "--init",
            "AABAABBABAB",
            "--depth",
            "5",
        ],
        &["--format", "json", "stats", "--length", "9"],
    ] {
        assert_eq!(invoke(args), invoke(args));
    }
    let a = invoke(&["--seed", "1", "corr", "--samples", "60"]).0;
    let b = invoke(&["--seed", "2", "corr", "--samples", "60"]).0;
    assert_ne!(a, b);
}

#[test]
fn paths_reads_saved_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let artifact = dir.path().join("single_rule.json");
    std::fs::write(
        &artifact,
        invoke(&[
            "--rule",
            "BA->AB",
            "multiway",
            "--init",
            "AABAABBABAB",
            "--depth",
            "6",
        ])
        .0,
    )
    .unwrap();
    let v = invoke_json(&[
        "paths",
        "--graph",
        artifact.to_str().unwrap(),
        "--depth",
        "3",
        "--all",
    ]);
    assert_eq!(v["result"]["physical_paths"].as_array().unwrap().len(), 7);
    assert_eq!(v["result"]["maximal_paths"][0]["score"]["num"], 62);
    assert_eq!(v["result"]["maximal_paths"][0]["score"]["den"], 3);
}
