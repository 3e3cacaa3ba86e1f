//! Paths through a multiway graph: physical paths, maximal-variety paths, action.

use std::collections::HashMap;
use std::fmt;

use num_traits::Zero;
use thiserror::Error;

use crate::engine::{MultiwayGraph, NodeId};
use crate::strcore::Rational;

/// Default cap on the number of enumerated paths.
pub const DEFAULT_PATH_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("path has no nodes")]
    Empty,
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("no event joins node {from} to node {to}")]
    NotConnected { from: NodeId, to: NodeId },
    #[error("layer range {from}..={to} is reversed")]
    ReversedRange { from: usize, to: usize },
    #[error("depth {depth} exceeds the graph depth {graph_depth}")]
    DepthOutOfRange { depth: usize, graph_depth: usize },
    #[error("more than {cap} paths; enumeration truncated")]
    TooManyPaths { cap: usize },
}

/// Node sequence through consecutive layers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    pub nodes: Vec<NodeId>,
}

impl Path {
    pub fn new(nodes: Vec<NodeId>) -> Self {
        Self { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn first(&self) -> Option<NodeId> {
        self.nodes.first().copied()
    }

    pub fn last(&self) -> Option<NodeId> {
        self.nodes.last().copied()
    }

    /// Arrow-joined node strings.
    pub fn render(&self, g: &MultiwayGraph) -> String {
        self.nodes
            .iter()
            .map(|id| {
                g.node(*id)
                    .map(|n| n.string.render())
                    .unwrap_or_else(|| format!("#{id}"))
            })
            .collect::<Vec<_>>()
            .join(" -> ")
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.nodes.iter().map(|n| n.to_string()).collect();
        f.write_str(&ids.join(" -> "))
    }
}

/// Checks that every node exists and consecutive nodes are joined by an event.
pub fn validate(p: &Path, g: &MultiwayGraph) -> Result<(), PathError> {
    if p.is_empty() {
        return Err(PathError::Empty);
    }
    for &id in &p.nodes {
        g.node(id).ok_or(PathError::UnknownNode(id))?;
    }
    for w in p.nodes.windows(2) {
        if !g.connected(w[0], w[1]) {
            return Err(PathError::NotConnected {
                from: w[0],
                to: w[1],
            });
        }
    }
    Ok(())
}

fn variety_sum<'a>(g: &MultiwayGraph, ids: impl Iterator<Item = &'a NodeId>) -> Rational {
    ids.map(|id| g.node(*id).expect("validated").variety.value())
        .fold(Rational::zero(), |a, b| a + b)
}

/// Negated variety sum over all nodes but the last. Single-node paths give 0.
pub fn action(p: &Path, g: &MultiwayGraph) -> Result<Rational, PathError> {
    validate(p, g)?;
    Ok(-variety_sum(g, p.nodes[..p.len() - 1].iter()))
}

/// Variety sum over every node, the quantity maximal-variety paths maximize.
pub fn score(p: &Path, g: &MultiwayGraph) -> Result<Rational, PathError> {
    validate(p, g)?;
    Ok(variety_sum(g, p.nodes.iter()))
}

pub fn enumerate_physical_paths(
    g: &MultiwayGraph,
    from_layer: usize,
    to_layer: usize,
) -> Result<Vec<Path>, PathError> {
    enumerate_physical_paths_capped(g, from_layer, to_layer, DEFAULT_PATH_CAP)
}

/// All-Leibnizian paths from any node of `from_layer` to any node of
/// `to_layer`, in depth-first order (start nodes in layer order, successors by
/// ascending id).
pub fn enumerate_physical_paths_capped(
    g: &MultiwayGraph,
    from_layer: usize,
    to_layer: usize,
    cap: usize,
) -> Result<Vec<Path>, PathError> {
    if from_layer > to_layer {
        return Err(PathError::ReversedRange {
            from: from_layer,
            to: to_layer,
        });
    }
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in g.layer(from_layer).iter().filter(|n| n.leibnizian) {
        stack.push(start.id);
        extend(g, to_layer - from_layer, &mut stack, &mut out, cap)?;
        stack.pop();
    }
    Ok(out)
}

fn extend(
    g: &MultiwayGraph,
    remaining: usize,
    stack: &mut Vec<NodeId>,
    out: &mut Vec<Path>,
    cap: usize,
) -> Result<(), PathError> {
    if remaining == 0 {
        if out.len() >= cap {
            return Err(PathError::TooManyPaths { cap });
        }
        out.push(Path::new(stack.clone()));
        return Ok(());
    }
    let tip = *stack.last().expect("non-empty stack");
    for &next in g.successors(tip) {
        if g.node(next).is_some_and(|n| n.leibnizian) {
            stack.push(next);
            extend(g, remaining - 1, stack, out, cap)?;
            stack.pop();
        }
    }
    Ok(())
}

/// Physical paths from layer 0 to `depth` with the largest variety sum over
/// all their nodes. Ties are all returned, sorted by node ids.
pub fn maximal_variety_paths(g: &MultiwayGraph, depth: usize) -> Result<Vec<Path>, PathError> {
    if depth > g.depth() {
        return Err(PathError::DepthOutOfRange {
            depth,
            graph_depth: g.depth(),
        });
    }
    // best prefix score ending at each Leibnizian node
    let mut best: HashMap<NodeId, Rational> = HashMap::new();
    for n in g.layer(0).iter().filter(|n| n.leibnizian) {
        best.insert(n.id, n.variety.value());
    }
    for d in 1..=depth {
        for n in g.layer(d).iter().filter(|n| n.leibnizian) {
            let top = g
                .predecessors(n.id)
                .iter()
                .filter_map(|p| best.get(p))
                .max()
                .copied();
            if let Some(top) = top {
                best.insert(n.id, top + n.variety.value());
            }
        }
    }
    let Some(target) = g
        .layer(depth)
        .iter()
        .filter_map(|n| best.get(&n.id))
        .max()
        .copied()
    else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for end in g
        .layer(depth)
        .iter()
        .filter(|n| best.get(&n.id) == Some(&target))
    {
        let mut suffix = vec![end.id];
        backtrack(g, &best, &mut suffix, &mut out);
    }
    for p in &mut out {
        p.nodes.reverse();
    }
    out.sort();
    Ok(out)
}

fn backtrack(
    g: &MultiwayGraph,
    best: &HashMap<NodeId, Rational>,
    suffix: &mut Vec<NodeId>,
    out: &mut Vec<Path>,
) {
    let tip = *suffix.last().expect("non-empty suffix");
    let node = g.node(tip).expect("node in graph");
    if node.layer == 0 {
        out.push(Path::new(suffix.clone()));
        return;
    }
    let need = best[&tip] - node.variety.value();
    for &p in g.predecessors(tip) {
        if best.get(&p) == Some(&need) {
            suffix.push(p);
            backtrack(g, best, suffix, out);
            suffix.pop();
        }
    }
}
