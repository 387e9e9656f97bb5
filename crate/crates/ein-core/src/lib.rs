//! Graph-level classification over exact subgraph isomorphism features.
//!
//! The model scores a graph by which patterns it contains: a sparse graph
//! mining layer maps pattern-occurrence indicators through per-pattern
//! weight groups into a small hidden vector, and a feed-forward network maps
//! that to class logits. Training runs proximal gradient descent with a
//! group-sparse penalty over a lazily expanded pattern enumeration tree; a
//! provable upper bound on descendant gradient norms prunes the tree so the
//! full candidate set never needs materializing.

pub mod bitset;
pub mod dataset;
pub mod dfs_code;
pub mod error;
pub mod graph;
pub mod miner;
pub mod model;
pub mod model_file;
pub mod optimizer;
pub mod report;

pub use error::{EinError, Result};
