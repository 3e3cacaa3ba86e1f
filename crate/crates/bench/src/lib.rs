//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use monadic_core::engine::{build_multiway, build_multiway_from, parse_rules};
use monadic_core::strcore::{Alphabet, CanonMode, CyclicString};
use monadic_core::{MultiwayGraph, MultiwayOptions};

pub fn alphabet(letters: &str) -> Arc<Alphabet> {
    Arc::new(Alphabet::new(letters.chars()).expect("distinct letters"))
}

pub fn word(a: &Arc<Alphabet>, text: &str) -> CyclicString {
    CyclicString::parse(a.clone(), text).expect("word over alphabet")
}

/// `AABAABBABAB` under `BA->AB`.
pub fn single_rule_graph(depth: usize) -> MultiwayGraph {
    let a = alphabet("AB");
    let rules = parse_rules(&a, "BA->AB").expect("rule");
    build_multiway(
        &word(&a, "AABAABBABAB"),
        &rules,
        MultiwayOptions::with_depth(depth),
    )
    .expect("graph")
}

/// The two-root, two-rule system whose physical layers form a full 2x2 block.
pub fn two_root_graph() -> MultiwayGraph {
    let a = alphabet("ABCD");
    let rules = parse_rules(&a, "BA->AB, DC->CD").expect("rules");
    let roots = [word(&a, "AABBDCABABDC"), word(&a, "ABABCDABABDC")];
    let opts = MultiwayOptions {
        max_depth: Some(1),
        canon_mode: CanonMode::Rotation,
        ..Default::default()
    };
    build_multiway_from(&roots, &rules, opts).expect("graph")
}
