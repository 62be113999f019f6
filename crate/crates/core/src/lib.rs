//! Unordered rooted trees: DAG compression, self-nested trees and their
//! approximation, a constrained edit distance computed by min-cost flow,
//! exact counting, and fast distance prediction.

pub mod approx;
pub mod bench;
pub mod bottomup;
pub mod combinatorics;
pub mod editdist;
pub mod error;
pub mod flow;
pub mod predictor;
pub mod reduction;
pub mod trees;

pub use error::{Error, Result};
pub use reduction::{DagReduction, DagVertexId, LinearDag};
pub use trees::Tree;
