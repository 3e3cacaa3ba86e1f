//! Serialized artifact formats: graph JSON and DOT, path and S-matrix JSON,
//! and the CSV tables.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    EngineError, GraphParts, MatchMode, MultiwayGraph, MultiwayOptions, NodeId, RewriteEvent,
    RewriteRule,
};
use crate::paths::{self, Path, PathError};
use crate::smatrix::{CMatrix, GateMatch, LayerSystem, SMatrixSpec};
use crate::stats::{CorrelationReport, EnsembleReport};
use crate::strcore::{ratio_to_f64, Alphabet, CanonMode, CyclicString, Rational, StringError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    String(#[from] StringError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("rational with zero denominator")]
    ZeroDenominator,
    #[error("event {src} -> {dst} does not reproduce its target")]
    InconsistentEvent { src: NodeId, dst: NodeId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalJson {
    pub num: i128,
    pub den: i128,
}

impl From<Rational> for RationalJson {
    fn from(r: Rational) -> Self {
        Self {
            num: *r.numer(),
            den: *r.denom(),
        }
    }
}

impl TryFrom<RationalJson> for Rational {
    type Error = IoError;

    fn try_from(r: RationalJson) -> Result<Self, IoError> {
        if r.den == 0 {
            return Err(IoError::ZeroDenominator);
        }
        Ok(Rational::new(r.num, r.den))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphOptionsJson {
    pub alphabet: String,
    pub rules: Vec<String>,
    pub match_mode: MatchMode,
    pub canon_mode: CanonMode,
    pub max_depth: Option<usize>,
    pub max_layer_width: usize,
    pub max_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeJson {
    pub id: NodeId,
    pub string: String,
    pub variety: RationalJson,
    pub leibnizian: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventJson {
    pub src: NodeId,
    pub dst: NodeId,
    pub rule: Option<usize>,
    pub pos: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub options: GraphOptionsJson,
    pub layers: Vec<Vec<NodeJson>>,
    pub events: Vec<EventJson>,
    pub truncated: bool,
    #[serde(default)]
    pub terminated: bool,
}

pub fn graph_to_json(g: &MultiwayGraph) -> GraphJson {
    let alphabet = g.alphabet();
    let o = g.options();
    GraphJson {
        options: GraphOptionsJson {
            alphabet: alphabet.letters().iter().collect(),
            rules: g.rules().iter().map(|r| r.render(alphabet)).collect(),
            match_mode: o.match_mode,
            canon_mode: o.canon_mode,
            max_depth: o.max_depth,
            max_layer_width: o.max_layer_width,
            max_nodes: o.max_nodes,
        },
        layers: g
            .layers()
            .iter()
            .map(|layer| {
                layer
                    .iter()
                    .map(|n| NodeJson {
                        id: n.id,
                        string: n.string.render(),
                        variety: n.variety.value().into(),
                        leibnizian: n.leibnizian,
                    })
                    .collect()
            })
            .collect(),
        events: g
            .events()
            .iter()
            .map(|e| EventJson {
                src: e.source,
                dst: e.target,
                rule: e.rule,
                pos: e.position,
            })
            .collect(),
        truncated: g.truncated(),
        terminated: g.terminated(),
    }
}

/// Rebuilds a graph, checking stored annotations and rule events against
/// recomputed ones.
pub fn graph_from_json(j: &GraphJson) -> Result<MultiwayGraph, IoError> {
    let alphabet = Arc::new(Alphabet::new(j.options.alphabet.chars())?);
    let rules = j
        .options
        .rules
        .iter()
        .map(|t| RewriteRule::parse(&alphabet, t))
        .collect::<Result<Vec<_>, _>>()?;
    let options = MultiwayOptions {
        match_mode: j.options.match_mode,
        canon_mode: j.options.canon_mode,
        max_depth: j.options.max_depth,
        max_layer_width: j.options.max_layer_width,
        max_nodes: j.options.max_nodes,
    };
    let layers = j
        .layers
        .iter()
        .map(|layer| {
            layer
                .iter()
                .map(|n| Ok((n.id, CyclicString::parse(alphabet.clone(), &n.string)?)))
                .collect::<Result<Vec<_>, StringError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let events = j
        .events
        .iter()
        .map(|e| RewriteEvent {
            source: e.src,
            target: e.dst,
            rule: e.rule,
            position: e.pos,
        })
        .collect();
    let g = MultiwayGraph::from_parts(GraphParts {
        alphabet,
        rules,
        options,
        layers,
        events,
        truncated: j.truncated,
        terminated: j.terminated,
    })?;
    for n in j.layers.iter().flatten() {
        let node = g.node(n.id).expect("node just inserted");
        if Rational::try_from(n.variety)? != node.variety.value() || n.leibnizian != node.leibnizian
        {
            return Err(EngineError::InconsistentNode { id: n.id }.into());
        }
    }
    for e in g
        .events()
        .iter()
        .filter(|e| e.rule.is_some() && e.position.is_some())
    {
        let target = &g.node(e.target).expect("validated").string;
        if crate::engine::replay_event(&g, e)? != *target {
            return Err(IoError::InconsistentEvent {
                src: e.source,
                dst: e.target,
            });
        }
    }
    Ok(g)
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering. Leibnizian nodes are red and boxed into a `physical`
/// cluster; edges on any of `highlight` are drawn green and bold.
pub fn graph_to_dot(g: &MultiwayGraph, highlight: &[Path]) -> String {
    let on_path = |a: NodeId, b: NodeId| {
        highlight
            .iter()
            .any(|p| p.nodes.windows(2).any(|w| w[0] == a && w[1] == b))
    };
    let mut out = String::new();
    out.push_str(
        "digraph multiway {\n  rankdir=TB;\n  node [shape=box, fontname=\"monospace\"];\n",
    );
    let label = |id: NodeId| {
        let n = g.node(id).expect("graph node");
        format!("{}\\n{}", dot_escape(&n.string.render()), n.variety)
    };
    out.push_str("  subgraph cluster_physical {\n    label=\"physical\";\n    color=red;\n");
    for n in g.nodes().filter(|n| n.leibnizian) {
        let _ = writeln!(
            out,
            "    n{} [label=\"{}\", color=red, fontcolor=red];",
            n.id,
            label(n.id)
        );
    }
    out.push_str("  }\n");
    for n in g.nodes().filter(|n| !n.leibnizian) {
        let _ = writeln!(
            out,
            "  n{} [label=\"{}\", color=gray40];",
            n.id,
            label(n.id)
        );
    }
    let mut seen = std::collections::BTreeSet::new();
    for e in g.events() {
        let rule = match (e.rule, e.position) {
            (Some(r), Some(p)) => {
                format!("{}@{}", dot_escape(&g.rules()[r].render(g.alphabet())), p)
            }
            _ => String::new(),
        };
        if !seen.insert((e.source, e.target, rule.clone())) {
            continue;
        }
        let style = if on_path(e.source, e.target) {
            ", color=green, penwidth=2.5"
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "  n{} -> n{} [label=\"{}\"{}];",
            e.source, e.target, rule, style
        );
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathJson {
    pub nodes: Vec<NodeId>,
    pub strings: Vec<String>,
    pub action: RationalJson,
    pub score: RationalJson,
}

pub fn path_to_json(g: &MultiwayGraph, p: &Path) -> Result<PathJson, IoError> {
    Ok(PathJson {
        nodes: p.nodes.clone(),
        strings: p
            .nodes
            .iter()
            .map(|id| g.node(*id).map(|n| n.string.render()).unwrap_or_default())
            .collect(),
        action: paths::action(p, g)?.into(),
        score: paths::score(p, g)?.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateMatchJson {
    pub gate: String,
    pub row_perm: Vec<usize>,
    pub col_perm: Vec<usize>,
    pub global_phase: f64,
    pub residual: f64,
}

impl From<&GateMatch> for GateMatchJson {
    fn from(m: &GateMatch) -> Self {
        Self {
            gate: m.gate.clone(),
            row_perm: m.row_perm.clone(),
            col_perm: m.col_perm.clone(),
            global_phase: m.global_phase,
            residual: m.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SMatrixJson {
    #[serde(rename = "in")]
    pub in_words: Vec<NodeId>,
    #[serde(rename = "out")]
    pub out_words: Vec<NodeId>,
    pub k: f64,
    pub gamma: f64,
    pub connected: Vec<Vec<bool>>,
    pub weights: Vec<Vec<f64>>,
    pub phases: Vec<ComplexJson>,
    pub dense: Vec<Vec<ComplexJson>>,
    pub matches: Vec<GateMatchJson>,
}

pub fn dense_to_json(u: &CMatrix) -> Vec<Vec<ComplexJson>> {
    (0..u.nrows())
        .map(|j| (0..u.ncols()).map(|i| u[(j, i)].into()).collect())
        .collect()
}

/// `out_words` may exceed the system's out-words when auxiliary rows were
/// appended; those rows carry no node id.
pub fn smatrix_to_json(ls: &LayerSystem, u: &SMatrixSpec, matches: &[GateMatch]) -> SMatrixJson {
    let w = &u.weights.entries;
    SMatrixJson {
        in_words: ls.in_words.clone(),
        out_words: ls.out_words.clone(),
        k: u.coupling.k,
        gamma: u.coupling.gamma,
        connected: (0..ls.n_out())
            .map(|j| (0..ls.n_in()).map(|i| ls.connected[(j, i)]).collect())
            .collect(),
        weights: (0..w.nrows())
            .map(|j| (0..w.ncols()).map(|i| w[(j, i)]).collect())
            .collect(),
        phases: u.phases.iter().map(|p| (*p).into()).collect(),
        dense: dense_to_json(&u.dense()),
        matches: matches.iter().map(GateMatchJson::from).collect(),
    }
}

#[derive(Serialize)]
struct ViewCsvRow<'a> {
    view: &'a str,
    radius: usize,
    n_expected: f64,
    fd_predicted: f64,
    abs_dev: f64,
}

pub fn ensemble_csv(report: &EnsembleReport) -> Result<String, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &report.rows {
        w.serialize(ViewCsvRow {
            view: &r.view,
            radius: r.radius,
            n_expected: r.n_expected,
            fd_predicted: r.fd_predicted,
            abs_dev: r.abs_dev,
        })?;
    }
    finish(w)
}

#[derive(Serialize)]
struct ScanCsvRow<'a> {
    string: &'a str,
    cond_entropy: f64,
    variety: f64,
}

pub fn scan_csv(report: &CorrelationReport) -> Result<String, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &report.rows {
        w.serialize(ScanCsvRow {
            string: &r.string,
            cond_entropy: r.cond_entropy,
            variety: ratio_to_f64(&r.variety),
        })?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, IoError> {
    let bytes = w
        .into_inner()
        .map_err(|e| IoError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
