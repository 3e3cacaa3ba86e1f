//! Transition matrices between multiway layers.
//!
//! An entry `U[j][i]` joins in-word `i` to out-word `j` and sums
//! `ω(γ)·exp(i·γ_s·S(γ)/k)` over the connecting paths, where `S` is the path
//! action and `γ_s` scales variety into action units. Between adjacent layers
//! the action depends only on the in-word, so `U = W · diag(phases)`.

pub mod gates;
pub mod solver;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::engine::{MultiwayGraph, NodeId};
use crate::paths::{PathError, DEFAULT_PATH_CAP};
use crate::strcore::{ratio_to_f64, Rational, Variety};

pub use gates::{gate_catalog, recognize_gate, GateCatalogEntry, GateMatch};
pub use solver::{
    euler_omega, extend_for_unitarity, solve_unitary_weights, ExtendOutcome, SolveMethod,
    SolveOutcome, SolverOptions,
};

pub type Mask = DMatrix<bool>;
pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SMatrixError {
    #[error("layer {from} must precede layer {to}")]
    InvalidLayers { from: usize, to: usize },
    #[error("layer {0} has no usable words")]
    EmptyLayer(usize),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("weight at ({row}, {col}) lies outside the connectivity support")]
    SupportViolation { row: usize, col: usize },
    #[error("paths into column {col} carry different actions; use a path-sum build")]
    AmbiguousAction { col: usize },
    #[error("pattern is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("{deficit} more out-words needed before parameters can be counted")]
    ParameterDeficit { deficit: usize },
    #[error("coupling k must be positive and finite, got {0}")]
    BadCoupling(f64),
}

/// Coupling constant `k` and the variety-to-action scale `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub k: f64,
    pub gamma: f64,
}

impl Default for Coupling {
    fn default() -> Self {
        Self { k: 1.0, gamma: 1.0 }
    }
}

impl Coupling {
    pub fn new(k: f64, gamma: f64) -> Result<Self, SMatrixError> {
        if !(k.is_finite() && k > 0.0) {
            return Err(SMatrixError::BadCoupling(k));
        }
        Ok(Self { k, gamma })
    }

    pub fn phase(&self, action: &Rational) -> Complex64 {
        Complex64::from_polar(1.0, self.gamma * ratio_to_f64(action) / self.k)
    }
}

/// One path joining an in-word to an out-word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathTerm {
    pub nodes: Vec<NodeId>,
    pub action: Rational,
}

/// Connectivity between the words of two layers.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSystem {
    pub layer_in: usize,
    pub layer_out: usize,
    pub restrict_physical: bool,
    pub in_words: Vec<NodeId>,
    pub out_words: Vec<NodeId>,
    pub in_varieties: Vec<Variety>,
    /// `connected[(j, i)]`: some path joins in-word `i` to out-word `j`.
    pub connected: Mask,
    /// `paths[j][i]`, every connecting path with its action.
    pub paths: Vec<Vec<Vec<PathTerm>>>,
    /// Words of the out layer no in-word reaches; they would be zero rows.
    pub unreached_out: Vec<NodeId>,
}

impl LayerSystem {
    pub fn n_in(&self) -> usize {
        self.in_words.len()
    }

    pub fn n_out(&self) -> usize {
        self.out_words.len()
    }

    pub fn is_adjacent(&self) -> bool {
        self.layer_out == self.layer_in + 1
    }

    /// The action shared by every path from `i` to `j`, if they agree.
    pub fn accumulated_action(&self, j: usize, i: usize) -> Option<Rational> {
        let terms = &self.paths[j][i];
        let first = terms.first()?.action;
        terms.iter().all(|t| t.action == first).then_some(first)
    }

    /// Action shared by every path leaving in-word `i`; `-V(in_i)` for an
    /// unconnected column.
    pub fn column_action(&self, i: usize) -> Result<Rational, SMatrixError> {
        let mut shared: Option<Rational> = None;
        for j in 0..self.n_out() {
            for t in &self.paths[j][i] {
                match shared {
                    None => shared = Some(t.action),
                    Some(a) if a != t.action => {
                        return Err(SMatrixError::AmbiguousAction { col: i })
                    }
                    _ => {}
                }
            }
        }
        Ok(shared.unwrap_or(-self.in_varieties[i].value()))
    }
}

/// Collects in-words, out-words and every connecting path between two layers.
///
/// With `restrict_physical` only Leibnizian words and all-Leibnizian paths
/// count. Out-words are those reached from some in-word, so no row of the
/// connectivity is empty; the rest are listed in `unreached_out`.
pub fn layer_system(
    g: &MultiwayGraph,
    layer_in: usize,
    layer_out: usize,
    restrict_physical: bool,
) -> Result<LayerSystem, SMatrixError> {
    if layer_in >= layer_out {
        return Err(SMatrixError::InvalidLayers {
            from: layer_in,
            to: layer_out,
        });
    }
    let usable = |id: NodeId| {
        g.node(id)
            .is_some_and(|n| n.leibnizian || !restrict_physical)
    };
    let in_words: Vec<NodeId> = g
        .layer(layer_in)
        .iter()
        .map(|n| n.id)
        .filter(|&id| usable(id))
        .collect();
    if in_words.is_empty() {
        return Err(SMatrixError::EmptyLayer(layer_in));
    }
    let candidates: Vec<NodeId> = g
        .layer(layer_out)
        .iter()
        .map(|n| n.id)
        .filter(|&id| usable(id))
        .collect();
    if candidates.is_empty() {
        return Err(SMatrixError::EmptyLayer(layer_out));
    }
    let col_of = |id: NodeId| candidates.iter().position(|&c| c == id);

    // per[i][candidate] -> paths
    let hops = layer_out - layer_in;
    let mut per: Vec<Vec<Vec<PathTerm>>> = vec![vec![Vec::new(); candidates.len()]; in_words.len()];
    let mut total = 0usize;
    for (i, &start) in in_words.iter().enumerate() {
        let mut stack = vec![start];
        walk(g, hops, &usable, &mut stack, &mut |nodes| {
            total += 1;
            if total > DEFAULT_PATH_CAP {
                return Err(PathError::TooManyPaths {
                    cap: DEFAULT_PATH_CAP,
                });
            }
            let action = -nodes[..nodes.len() - 1]
                .iter()
                .map(|id| g.node(*id).expect("walked node").variety.value())
                .fold(Rational::from_integer(0), |a, b| a + b);
            let c = col_of(*nodes.last().expect("non-empty")).expect("usable out-word");
            per[i][c].push(PathTerm {
                nodes: nodes.to_vec(),
                action,
            });
            Ok(())
        })?;
    }

    let mut out_words = Vec::new();
    let mut unreached_out = Vec::new();
    let mut paths = Vec::new();
    for (c, &id) in candidates.iter().enumerate() {
        if per.iter().any(|row| !row[c].is_empty()) {
            out_words.push(id);
            paths.push(per.iter().map(|row| row[c].clone()).collect::<Vec<_>>());
        } else {
            unreached_out.push(id);
        }
    }
    if out_words.is_empty() {
        return Err(SMatrixError::EmptyLayer(layer_out));
    }
    let connected = Mask::from_fn(out_words.len(), in_words.len(), |j, i| {
        !paths[j][i].is_empty()
    });
    let in_varieties = in_words
        .iter()
        .map(|id| g.node(*id).expect("in-word").variety)
        .collect();
    Ok(LayerSystem {
        layer_in,
        layer_out,
        restrict_physical,
        in_words,
        out_words,
        in_varieties,
        connected,
        paths,
        unreached_out,
    })
}

fn walk(
    g: &MultiwayGraph,
    remaining: usize,
    usable: &dyn Fn(NodeId) -> bool,
    stack: &mut Vec<NodeId>,
    emit: &mut dyn FnMut(&[NodeId]) -> Result<(), PathError>,
) -> Result<(), PathError> {
    if remaining == 0 {
        return emit(stack);
    }
    let tip = *stack.last().expect("non-empty stack");
    for &next in g.successors(tip) {
        if usable(next) {
            stack.push(next);
            walk(g, remaining - 1, usable, stack, emit)?;
            stack.pop();
        }
    }
    Ok(())
}

/// Real path weights with the support they must respect.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub entries: DMatrix<f64>,
    pub support: Mask,
}

impl WeightMatrix {
    pub fn new(entries: DMatrix<f64>, support: Mask) -> Result<Self, SMatrixError> {
        if entries.shape() != support.shape() {
            return Err(SMatrixError::ShapeMismatch {
                expected: support.shape(),
                got: entries.shape(),
            });
        }
        for ((j, i), w) in indices(&entries).zip(entries.iter()) {
            if !support[(j, i)] && *w != 0.0 {
                return Err(SMatrixError::SupportViolation { row: j, col: i });
            }
        }
        Ok(Self { entries, support })
    }

    /// Unit weight on every supported entry.
    pub fn ones(support: &Mask) -> Self {
        let entries = DMatrix::from_fn(support.nrows(), support.ncols(), |j, i| {
            if support[(j, i)] {
                1.0
            } else {
                0.0
            }
        });
        Self {
            entries,
            support: support.clone(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.entries.shape()
    }

    /// `max |WᵀW - I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        gram_residual(&self.entries)
    }
}

/// Column-major (row, col) pairs matching `DMatrix::iter` order.
fn indices<T>(m: &DMatrix<T>) -> impl Iterator<Item = (usize, usize)> {
    let rows = m.nrows();
    (0..m.len()).map(move |k| (k % rows, k / rows))
}

pub fn gram_residual(w: &DMatrix<f64>) -> f64 {
    let n = w.ncols();
    let gram = w.transpose() * w - DMatrix::<f64>::identity(n, n);
    gram.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// `max |UᴴU - I|`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let n = u.ncols();
    let gram = u.adjoint() * u - CMatrix::identity(n, n);
    gram.iter().fold(0.0, |acc, x| acc.max(x.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Weights times one unit phase per column.
#[derive(Debug, Clone, PartialEq)]
pub struct SMatrixSpec {
    pub weights: WeightMatrix,
    pub phases: Vec<Complex64>,
    pub coupling: Coupling,
}

impl SMatrixSpec {
    pub fn new(
        weights: WeightMatrix,
        phases: Vec<Complex64>,
        coupling: Coupling,
    ) -> Result<Self, SMatrixError> {
        if phases.len() != weights.shape().1 {
            return Err(SMatrixError::ShapeMismatch {
                expected: (1, weights.shape().1),
                got: (1, phases.len()),
            });
        }
        Ok(Self {
            weights,
            phases,
            coupling,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.weights.shape()
    }

    /// `U[j][i] = W[j][i] · phase[i]`.
    pub fn dense(&self) -> CMatrix {
        let w = &self.weights.entries;
        CMatrix::from_fn(w.nrows(), w.ncols(), |j, i| self.phases[i] * w[(j, i)])
    }
}

/// S-matrix with per-entry weights `w` and one phase per in-word.
///
/// Requires every path into a column to share its action, which always holds
/// for adjacent layers.
pub fn build_smatrix(
    ls: &LayerSystem,
    w: &WeightMatrix,
    coupling: Coupling,
) -> Result<SMatrixSpec, SMatrixError> {
    let shape = (ls.n_out(), ls.n_in());
    if w.shape() != shape {
        return Err(SMatrixError::ShapeMismatch {
            expected: shape,
            got: w.shape(),
        });
    }
    for j in 0..shape.0 {
        for i in 0..shape.1 {
            if w.entries[(j, i)] != 0.0 && !ls.connected[(j, i)] {
                return Err(SMatrixError::SupportViolation { row: j, col: i });
            }
        }
    }
    let phases = (0..shape.1)
        .map(|i| ls.column_action(i).map(|a| coupling.phase(&a)))
        .collect::<Result<Vec<_>, _>>()?;
    SMatrixSpec::new(w.clone(), phases, coupling)
}

/// Sum over connecting paths of (product of edge weights) · phase(action).
pub fn path_sum_matrix(
    ls: &LayerSystem,
    edge_weight: impl Fn(NodeId, NodeId) -> f64,
    coupling: Coupling,
) -> CMatrix {
    CMatrix::from_fn(ls.n_out(), ls.n_in(), |j, i| {
        ls.paths[j][i]
            .iter()
            .map(|t| {
                let w: f64 = t
                    .nodes
                    .windows(2)
                    .map(|e| edge_weight(e[0], e[1]))
                    .product();
                coupling.phase(&t.action) * w
            })
            .sum()
    })
}

/// Each nonzero column scaled to unit norm; zero columns stay zero.
pub fn normalize_columns(u: &CMatrix) -> CMatrix {
    let mut out = u.clone();
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= Complex64::new(norm, 0.0);
        }
    }
    out
}

/// Product `u2 · u1` of consecutive layer matrices.
pub fn compose(u2: &SMatrixSpec, u1: &SMatrixSpec) -> Result<CMatrix, SMatrixError> {
    compose_dense(&u2.dense(), &u1.dense())
}

pub fn compose_dense(u2: &CMatrix, u1: &CMatrix) -> Result<CMatrix, SMatrixError> {
    if u2.ncols() != u1.nrows() {
        return Err(SMatrixError::ShapeMismatch {
            expected: (u2.nrows(), u1.nrows()),
            got: u2.shape(),
        });
    }
    Ok(u2 * u1)
}

/// Square pattern whose connections are all two-sided.
pub fn mutual_interaction_check(pattern: &Mask) -> Result<bool, SMatrixError> {
    let (r, c) = pattern.shape();
    if r != c {
        return Err(SMatrixError::NotSquare { rows: r, cols: c });
    }
    Ok((0..r).all(|a| (0..a).all(|b| pattern[(a, b)] == pattern[(b, a)])))
}

/// Free real parameters left after imposing `UᴴU = I_n` on `m` out-words,
/// `mn - n(n+1)/2`.
pub fn free_param_count(n: usize, m: usize) -> Result<usize, SMatrixError> {
    if 2 * m < n + 1 {
        return Err(SMatrixError::ParameterDeficit {
            deficit: delta_m(n, m),
        });
    }
    Ok(n * (2 * m - n - 1) / 2)
}

/// Auxiliary out-words needed so that `2(m + Δm) ≥ n + 1`.
pub fn delta_m(n: usize, m: usize) -> usize {
    if 2 * m > n {
        0
    } else if n.is_multiple_of(2) {
        n / 2 + 1 - m
    } else {
        n.div_ceil(2) - m
    }
}

/// A connected component of the in/out bipartite connectivity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub ins: Vec<usize>,
    pub outs: Vec<usize>,
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut root = x;
    while parent[root] != root {
        root = parent[root];
    }
    let mut cur = x;
    while parent[cur] != root {
        let next = parent[cur];
        parent[cur] = root;
        cur = next;
    }
    root
}

/// Connected components of a connectivity mask, ordered by first in-word
/// (components without in-words last).
pub fn connected_blocks(mask: &Mask) -> Vec<Block> {
    let (m, n) = mask.shape();
    // in-words 0..n, out-words n..n+m
    let mut parent: Vec<usize> = (0..n + m).collect();
    for j in 0..m {
        for i in 0..n {
            if mask[(j, i)] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, n + j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut blocks: Vec<(usize, Block)> = Vec::new();
    for x in 0..n + m {
        let root = find(&mut parent, x);
        let pos = match blocks.iter().position(|(r, _)| *r == root) {
            Some(p) => p,
            None => {
                blocks.push((
                    root,
                    Block {
                        ins: Vec::new(),
                        outs: Vec::new(),
                    },
                ));
                blocks.len() - 1
            }
        };
        if x < n {
            blocks[pos].1.ins.push(x);
        } else {
            blocks[pos].1.outs.push(x - n);
        }
    }
    let mut blocks: Vec<Block> = blocks.into_iter().map(|(_, b)| b).collect();
    blocks.sort_by_key(|b| b.ins.first().copied().unwrap_or(usize::MAX));
    blocks
}

/// Tensor-factor structure of a layer system's connectivity.
pub fn tensor_decompose_check(ls: &LayerSystem) -> Vec<Block> {
    connected_blocks(&ls.connected)
}

/// `H = -arg(U_ii)/Δt` for a diagonal unitary, `None` otherwise.
pub fn diagonal_hamiltonian(u: &CMatrix, dt: f64) -> Option<Vec<f64>> {
    const TOL: f64 = 1e-12;
    if !u.is_square() {
        return None;
    }
    for j in 0..u.nrows() {
        for i in 0..u.ncols() {
            let z = u[(j, i)];
            if (i == j && (z.norm() - 1.0).abs() > TOL) || (i != j && z.norm() > TOL) {
                return None;
            }
        }
    }
    Some((0..u.nrows()).map(|i| -u[(i, i)].arg() / dt).collect())
}
