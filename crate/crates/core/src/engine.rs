//! Nondeterministic string substitution and layered multiway graphs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use thiserror::Error;

use crate::strcore::{
    canonicalize, is_leibnizian, variety, Alphabet, CanonMode, CyclicString, StringError, Symbol,
    Variety,
};

pub type NodeId = usize;

/// `((layer, index), (layer + 1, index))` for hand-built graphs.
pub type LayerEdge = ((usize, usize), (usize, usize));

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error(transparent)]
    String(#[from] StringError),
    #[error("malformed rule {0:?}: expected LHS->RHS with non-empty sides")]
    MalformedRule(String),
    #[error("rule does not match at position {position}")]
    NotAMatch { position: usize },
    #[error("rule index {0} out of range")]
    UnknownRule(usize),
    #[error("no initial state given")]
    NoRoots,
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("event {from} -> {to} does not join consecutive layers")]
    LayerSkip { from: NodeId, to: NodeId },
    #[error("node {id} carries inconsistent annotations")]
    InconsistentNode { id: NodeId },
}

/// String substitution `lhs -> rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RewriteRule {
    pub lhs: Vec<Symbol>,
    pub rhs: Vec<Symbol>,
}

impl RewriteRule {
    pub fn new(lhs: Vec<Symbol>, rhs: Vec<Symbol>) -> Result<Self, EngineError> {
        if lhs.is_empty() || rhs.is_empty() {
            return Err(EngineError::MalformedRule(format!("{lhs:?}->{rhs:?}")));
        }
        Ok(Self { lhs, rhs })
    }

    /// Parses `LHS->RHS`.
    pub fn parse(alphabet: &Alphabet, text: &str) -> Result<Self, EngineError> {
        let (lhs, rhs) = text
            .split_once("->")
            .ok_or_else(|| EngineError::MalformedRule(text.to_string()))?;
        let (lhs, rhs) = (lhs.trim(), rhs.trim());
        if lhs.is_empty() || rhs.is_empty() {
            return Err(EngineError::MalformedRule(text.to_string()));
        }
        Self::new(alphabet.encode(lhs)?, alphabet.encode(rhs)?)
    }

    pub fn render(&self, alphabet: &Alphabet) -> String {
        format!(
            "{}->{}",
            alphabet.render(&self.lhs),
            alphabet.render(&self.rhs)
        )
    }
}

/// Splits a comma-separated rule list.
pub fn parse_rules(alphabet: &Alphabet, text: &str) -> Result<Vec<RewriteRule>, EngineError> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| RewriteRule::parse(alphabet, t))
        .collect()
}

/// Letters of `rule_texts` in `LHS->RHS` form, for alphabet derivation.
pub fn rule_letters(rule_texts: &[String]) -> String {
    rule_texts
        .iter()
        .flat_map(|r| r.chars())
        .filter(|&c| c != '-' && c != '>' && c != ',' && !c.is_whitespace())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// No match may straddle the seam.
    #[default]
    Linear,
    /// Matches may wrap from the end of the string to its start.
    Cyclic,
}

impl MatchMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            MatchMode::Linear => "linear",
            MatchMode::Cyclic => "cyclic",
        }
    }
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(MatchMode::Linear),
            "cyclic" => Ok(MatchMode::Cyclic),
            other => Err(format!("unknown match mode {other:?} (linear, cyclic)")),
        }
    }
}

/// Ascending start positions where `rule.lhs` occurs.
pub fn find_matches(s: &CyclicString, rule: &RewriteRule, mode: MatchMode) -> Vec<usize> {
    let n = s.len();
    let k = rule.lhs.len();
    if k > n {
        return Vec::new();
    }
    let sym = s.symbols();
    match mode {
        MatchMode::Linear => (0..=n - k)
            .filter(|&p| sym[p..p + k] == rule.lhs[..])
            .collect(),
        MatchMode::Cyclic => (0..n)
            .filter(|&p| (0..k).all(|t| sym[(p + t) % n] == rule.lhs[t]))
            .collect(),
    }
}

/// Replaces the `lhs` occurrence at `position` by `rhs`.
///
/// A wrapping match is rewritten in rotated coordinates and then re-anchored so
/// that the untouched remainder keeps its original offset when the rule
/// preserves length.
pub fn apply_rule(
    s: &CyclicString,
    rule: &RewriteRule,
    position: usize,
    mode: MatchMode,
) -> Result<CyclicString, EngineError> {
    let n = s.len();
    let k = rule.lhs.len();
    let sym = s.symbols();
    let is_match = match mode {
        MatchMode::Linear => position + k <= n && sym[position..position + k] == rule.lhs[..],
        MatchMode::Cyclic => {
            position < n && k <= n && (0..k).all(|t| sym[(position + t) % n] == rule.lhs[t])
        }
    };
    if !is_match {
        return Err(EngineError::NotAMatch { position });
    }
    let out = if position + k <= n {
        let mut out = Vec::with_capacity(n - k + rule.rhs.len());
        out.extend_from_slice(&sym[..position]);
        out.extend_from_slice(&rule.rhs);
        out.extend_from_slice(&sym[position + k..]);
        out
    } else {
        let tail_len = n - position; // lhs letters before the seam
        let wrapped = k - tail_len; // lhs letters after the seam
        let rest = &sym[wrapped..position];
        let front = wrapped.min(rule.rhs.len());
        let split = rule.rhs.len() - front;
        let mut out = Vec::with_capacity(n - k + rule.rhs.len());
        out.extend_from_slice(&rule.rhs[split..]);
        out.extend_from_slice(rest);
        out.extend_from_slice(&rule.rhs[..split]);
        out
    };
    Ok(CyclicString::new(s.alphabet().clone(), out)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiwayOptions {
    pub match_mode: MatchMode,
    pub canon_mode: CanonMode,
    /// `None` expands until the frontier empties or a cap is hit.
    pub max_depth: Option<usize>,
    pub max_layer_width: usize,
    pub max_nodes: usize,
}

impl Default for MultiwayOptions {
    fn default() -> Self {
        Self {
            match_mode: MatchMode::Linear,
            canon_mode: CanonMode::Literal,
            max_depth: None,
            max_layer_width: 100_000,
            max_nodes: 1_000_000,
        }
    }
}

impl MultiwayOptions {
    pub fn with_depth(depth: usize) -> Self {
        Self {
            max_depth: Some(depth),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub layer: usize,
    pub string: CyclicString,
    pub variety: Variety,
    pub leibnizian: bool,
}

impl Node {
    fn new(id: NodeId, layer: usize, string: CyclicString) -> Self {
        let leibnizian = is_leibnizian(&string);
        let variety = variety(&string);
        Self {
            id,
            layer,
            string,
            variety,
            leibnizian,
        }
    }
}

/// One rule application. Hand-built graphs may leave rule and position empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RewriteEvent {
    pub source: NodeId,
    pub target: NodeId,
    pub rule: Option<usize>,
    pub position: Option<usize>,
}

/// Layered multiway evolution graph.
///
/// Node identity is (canonical string, depth): a string reached at two depths
/// occupies two nodes.
#[derive(Debug, Clone)]
pub struct MultiwayGraph {
    alphabet: Arc<Alphabet>,
    rules: Vec<RewriteRule>,
    options: MultiwayOptions,
    layers: Vec<Vec<Node>>,
    events: Vec<RewriteEvent>,
    roots: Vec<NodeId>,
    truncated: bool,
    terminated: bool,
    index: HashMap<NodeId, (usize, usize)>,
    succ: BTreeMap<NodeId, Vec<NodeId>>,
    pred: BTreeMap<NodeId, Vec<NodeId>>,
}

impl PartialEq for MultiwayGraph {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet
            && self.rules == other.rules
            && self.options == other.options
            && self.layers == other.layers
            && self.events == other.events
            && self.roots == other.roots
            && self.truncated == other.truncated
            && self.terminated == other.terminated
    }
}

/// Raw parts of a graph, as read back from a serialized artifact.
#[derive(Debug, Clone)]
pub struct GraphParts {
    pub alphabet: Arc<Alphabet>,
    pub rules: Vec<RewriteRule>,
    pub options: MultiwayOptions,
    pub layers: Vec<Vec<(NodeId, CyclicString)>>,
    pub events: Vec<RewriteEvent>,
    pub truncated: bool,
    pub terminated: bool,
}

impl MultiwayGraph {
    /// Builds a graph from explicit nodes, recomputing every annotation.
    ///
    /// Layer 0 nodes are the roots; events must join consecutive layers.
    pub fn from_parts(parts: GraphParts) -> Result<Self, EngineError> {
        let GraphParts {
            alphabet,
            rules,
            options,
            layers,
            mut events,
            truncated,
            terminated,
        } = parts;
        let layers: Vec<Vec<Node>> = layers
            .into_iter()
            .enumerate()
            .map(|(d, layer)| {
                layer
                    .into_iter()
                    .map(|(id, s)| Node::new(id, d, s))
                    .collect()
            })
            .collect();
        let mut index = HashMap::new();
        for (d, layer) in layers.iter().enumerate() {
            for (k, node) in layer.iter().enumerate() {
                if index.insert(node.id, (d, k)).is_some() {
                    return Err(EngineError::DuplicateNode(node.id));
                }
            }
        }
        for e in &events {
            let (ds, _) = *index
                .get(&e.source)
                .ok_or(EngineError::UnknownNode(e.source))?;
            let (dt, _) = *index
                .get(&e.target)
                .ok_or(EngineError::UnknownNode(e.target))?;
            if dt != ds + 1 {
                return Err(EngineError::LayerSkip {
                    from: e.source,
                    to: e.target,
                });
            }
            if let Some(r) = e.rule {
                if r >= rules.len() {
                    return Err(EngineError::UnknownRule(r));
                }
            }
        }
        events.sort_by_key(|e| (e.source, e.rule, e.position, e.target));
        let roots = layers
            .first()
            .map(|l| l.iter().map(|n| n.id).collect())
            .unwrap_or_default();
        let mut succ: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        let mut pred: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for e in &events {
            succ.entry(e.source).or_default().push(e.target);
            pred.entry(e.target).or_default().push(e.source);
        }
        for list in succ.values_mut().chain(pred.values_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self {
            alphabet,
            rules,
            options,
            layers,
            events,
            roots,
            truncated,
            terminated,
            index,
            succ,
            pred,
        })
    }

    /// Hand-built graph: `layers` in the given order, ids assigned
    /// sequentially.
    pub fn from_layers(
        alphabet: Arc<Alphabet>,
        layers: Vec<Vec<CyclicString>>,
        edges: &[LayerEdge],
    ) -> Result<Self, EngineError> {
        let mut ids = Vec::with_capacity(layers.len());
        let mut next = 0;
        let layers: Vec<Vec<(NodeId, CyclicString)>> = layers
            .into_iter()
            .map(|layer| {
                let row: Vec<_> = layer
                    .into_iter()
                    .map(|s| {
                        next += 1;
                        (next - 1, s)
                    })
                    .collect();
                ids.push(row.iter().map(|(id, _)| *id).collect::<Vec<_>>());
                row
            })
            .collect();
        let lookup = |(d, k): (usize, usize)| -> Result<NodeId, EngineError> {
            ids.get(d)
                .and_then(|l| l.get(k))
                .copied()
                .ok_or(EngineError::UnknownNode(usize::MAX))
        };
        let events = edges
            .iter()
            .map(|&(a, b)| {
                Ok(RewriteEvent {
                    source: lookup(a)?,
                    target: lookup(b)?,
                    rule: None,
                    position: None,
                })
            })
            .collect::<Result<Vec<_>, EngineError>>()?;
        let options = MultiwayOptions {
            max_depth: Some(ids.len().saturating_sub(1)),
            ..Default::default()
        };
        Self::from_parts(GraphParts {
            alphabet,
            rules: Vec::new(),
            options,
            layers,
            events,
            truncated: false,
            terminated: false,
        })
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    pub fn options(&self) -> &MultiwayOptions {
        &self.options
    }

    pub fn layers(&self) -> &[Vec<Node>] {
        &self.layers
    }

    pub fn layer(&self, d: usize) -> &[Node] {
        self.layers.get(d).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Index of the deepest layer.
    pub fn depth(&self) -> usize {
        self.layers.len().saturating_sub(1)
    }

    pub fn events(&self) -> &[RewriteEvent] {
        &self.events
    }

    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// The deepest layer admits no further rewriting.
    pub fn terminated(&self) -> bool {
        self.terminated
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.index.get(&id).map(|&(d, k)| &self.layers[d][k])
    }

    pub fn node_count(&self) -> usize {
        self.index.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.layers.iter().flatten()
    }

    /// Distinct targets of events leaving `id`, ascending.
    pub fn successors(&self, id: NodeId) -> &[NodeId] {
        self.succ.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn predecessors(&self, id: NodeId) -> &[NodeId] {
        self.pred.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn connected(&self, source: NodeId, target: NodeId) -> bool {
        self.successors(source).binary_search(&target).is_ok()
    }

    /// Number of distinct (source, target) pairs.
    pub fn edge_count(&self) -> usize {
        self.succ.values().map(Vec::len).sum()
    }
}

fn rewrite(
    s: &CyclicString,
    rule: &RewriteRule,
    position: usize,
    options: &MultiwayOptions,
) -> Result<CyclicString, EngineError> {
    Ok(canonicalize(
        &apply_rule(s, rule, position, options.match_mode)?,
        options.canon_mode,
    ))
}

/// Re-applies an event's rule to its source, as the graph would.
pub fn replay_event(g: &MultiwayGraph, e: &RewriteEvent) -> Result<CyclicString, EngineError> {
    let source = g.node(e.source).ok_or(EngineError::UnknownNode(e.source))?;
    let (rule, position) = match (e.rule, e.position) {
        (Some(r), Some(p)) => (r, p),
        _ => return Err(EngineError::UnknownRule(usize::MAX)),
    };
    let r = g.rules.get(rule).ok_or(EngineError::UnknownRule(rule))?;
    rewrite(&source.string, r, position, &g.options)
}

/// Breadth-first multiway expansion from a single initial state.
pub fn build_multiway(
    root: &CyclicString,
    rules: &[RewriteRule],
    options: MultiwayOptions,
) -> Result<MultiwayGraph, EngineError> {
    build_multiway_from(std::slice::from_ref(root), rules, options)
}

/// Breadth-first multiway expansion from one or more initial states.
///
/// Each node spawns one child per (rule, position) match; children are
/// canonicalized and deduplicated within their layer, and every event is
/// recorded, including those landing on an already-present child.
pub fn build_multiway_from(
    roots: &[CyclicString],
    rules: &[RewriteRule],
    options: MultiwayOptions,
) -> Result<MultiwayGraph, EngineError> {
    let first = roots.first().ok_or(EngineError::NoRoots)?;
    let alphabet = first.alphabet().clone();

    let layer0: BTreeSet<CyclicString> = roots
        .iter()
        .map(|r| canonicalize(r, options.canon_mode))
        .collect();
    let mut next_id = 0;
    let mut layers: Vec<Vec<(NodeId, CyclicString)>> = vec![layer0
        .into_iter()
        .map(|s| {
            next_id += 1;
            (next_id - 1, s)
        })
        .collect()];
    let mut events = Vec::new();
    let mut truncated = false;
    let terminated;

    loop {
        let frontier = layers.last().expect("layer 0 exists");
        let mut children: BTreeMap<CyclicString, Vec<(NodeId, usize, usize)>> = BTreeMap::new();
        for (parent, s) in frontier {
            for (ri, rule) in rules.iter().enumerate() {
                for pos in find_matches(s, rule, options.match_mode) {
                    let child = rewrite(s, rule, pos, &options)?;
                    children.entry(child).or_default().push((*parent, ri, pos));
                }
            }
        }
        if children.is_empty() {
            terminated = true;
            break;
        }
        if options.max_depth.is_some_and(|d| layers.len() > d) {
            terminated = false;
            break;
        }
        if children.len() > options.max_layer_width || next_id + children.len() > options.max_nodes
        {
            truncated = true;
            terminated = false;
            break;
        }
        let mut layer = Vec::with_capacity(children.len());
        for (child, origins) in children {
            let id = next_id;
            next_id += 1;
            for (source, rule, position) in origins {
                events.push(RewriteEvent {
                    source,
                    target: id,
                    rule: Some(rule),
                    position: Some(position),
                });
            }
            layer.push((id, child));
        }
        layers.push(layer);
    }

    MultiwayGraph::from_parts(GraphParts {
        alphabet,
        rules: rules.to_vec(),
        options,
        layers,
        events,
        truncated,
        terminated,
    })
}

/// The multiway graph restricted to Leibnizian nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalSubgraph(MultiwayGraph);

impl PhysicalSubgraph {
    pub fn graph(&self) -> &MultiwayGraph {
        &self.0
    }

    pub fn into_graph(self) -> MultiwayGraph {
        self.0
    }
}

impl std::ops::Deref for PhysicalSubgraph {
    type Target = MultiwayGraph;

    fn deref(&self) -> &MultiwayGraph {
        &self.0
    }
}

/// Keeps Leibnizian nodes and the events between them. Layer indices and node
/// ids are preserved, so some layers may end up empty.
pub fn physical_subgraph(g: &MultiwayGraph) -> PhysicalSubgraph {
    let layers: Vec<Vec<Node>> = g
        .layers
        .iter()
        .map(|l| l.iter().filter(|n| n.leibnizian).cloned().collect())
        .collect();
    let mut index = HashMap::new();
    for (d, layer) in layers.iter().enumerate() {
        for (k, node) in layer.iter().enumerate() {
            index.insert(node.id, (d, k));
        }
    }
    let keep = |id: &NodeId| index.contains_key(id);
    let events: Vec<RewriteEvent> = g
        .events
        .iter()
        .filter(|e| keep(&e.source) && keep(&e.target))
        .copied()
        .collect();
    let filter_adj = |adj: &BTreeMap<NodeId, Vec<NodeId>>| -> BTreeMap<NodeId, Vec<NodeId>> {
        adj.iter()
            .filter(|(k, _)| keep(k))
            .map(|(k, v)| (*k, v.iter().copied().filter(keep).collect::<Vec<_>>()))
            .filter(|(_, v)| !v.is_empty())
            .collect()
    };
    let succ = filter_adj(&g.succ);
    let pred = filter_adj(&g.pred);
    PhysicalSubgraph(MultiwayGraph {
        alphabet: g.alphabet.clone(),
        rules: g.rules.clone(),
        options: g.options,
        roots: g.roots.iter().copied().filter(keep).collect(),
        layers,
        events,
        truncated: g.truncated,
        terminated: g.terminated,
        index,
        succ,
        pred,
    })
}
