//! Leibnizian cyclic strings, multiway string rewriting, and the transition
//! matrices built from path sums over multiway layers.
//!
//! The modules build on each other in order: [`strcore`] analyses single
//! strings, [`engine`] grows multiway graphs, [`paths`] scores paths through
//! them, [`smatrix`] turns layer connectivity into (semi-)unitary matrices and
//! recognizes quantum gates, and [`stats`] computes ensemble occupation
//! statistics. [`io`] holds the JSON, DOT and CSV artifact formats.

pub mod engine;
pub mod io;
pub mod paths;
pub mod smatrix;
pub mod stats;
pub mod strcore;

pub use engine::{
    build_multiway, build_multiway_from, physical_subgraph, MatchMode, MultiwayGraph,
    MultiwayOptions, NodeId, RewriteRule,
};
pub use paths::Path;
pub use smatrix::{Coupling, LayerSystem, SMatrixSpec, WeightMatrix};
pub use strcore::{Alphabet, CanonMode, CyclicString, Rational, Variety};
