//! Syntax trees, subtree bags and dataflow edges.

mod cst;
mod dataflow;
mod subtrees;

pub use cst::{parse_cst, parse_source, SyntaxTree};
pub use dataflow::{dataflow_from_tree, extract_dataflow, DataflowGraph};
pub use subtrees::{extract_subtrees, SubtreeBag, DEFAULT_SUBTREE_HEIGHT};
