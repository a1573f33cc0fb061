//! Flow-insensitive, intraprocedural def-use edges between variable names.
//!
//! Statements are visited in source order with control flow linearized. At
//! each definition site every variable read on the right-hand side that already
//! has a visible definition emits an edge `(read, defined)`, meaning the value
//! of the defined variable comes from the read one. Function and class bodies
//! start from a copy of the enclosing scope plus their parameters.

mod java;
mod python;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::cst::{parse_cst, SyntaxTree};
use crate::error::Result;
use crate::multiset::Multiset;
use crate::program::{Language, Program};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataflowGraph {
    pub edges: Multiset<(String, String)>,
}

impl DataflowGraph {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, from: &str, to: &str) -> bool {
        self.edges.count(&(from.to_string(), to.to_string())) > 0
    }
}

pub fn extract_dataflow(program: &Program) -> Result<DataflowGraph> {
    let tree = parse_cst(program)?;
    Ok(dataflow_from_tree(&tree))
}

pub fn dataflow_from_tree(tree: &SyntaxTree) -> DataflowGraph {
    let mut state = FlowState::default();
    match tree.language() {
        Language::Python => python::PythonFlow::new(tree, &mut state).run(),
        Language::Java => java::JavaFlow::new(tree, &mut state).run(),
    }
    DataflowGraph { edges: state.edges }
}

#[derive(Default)]
struct FlowState {
    edges: Multiset<(String, String)>,
    defined: HashSet<String>,
}

impl FlowState {
    fn is_defined(&self, name: &str) -> bool {
        self.defined.contains(name)
    }

    /// Emits `reads × targets` edges, then marks the targets as defined.
    fn define_from(&mut self, reads: &[String], targets: &[String]) {
        for read in reads {
            for target in targets {
                self.edges.insert((read.clone(), target.clone()));
            }
        }
        for target in targets {
            self.defined.insert(target.clone());
        }
    }

    fn define(&mut self, name: impl Into<String>) {
        self.defined.insert(name.into());
    }

    fn enter_scope(&self) -> HashSet<String> {
        self.defined.clone()
    }

    fn leave_scope(&mut self, saved: HashSet<String>) {
        self.defined = saved;
    }
}

/// Appends names not already present, keeping first-occurrence order.
fn push_unique(into: &mut Vec<String>, names: impl IntoIterator<Item = String>) {
    for name in names {
        if !into.contains(&name) {
            into.push(name);
        }
    }
}
