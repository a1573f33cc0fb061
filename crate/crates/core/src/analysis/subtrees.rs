use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use tree_sitter::Node;

use super::cst::{structural_children, SyntaxTree};
use crate::multiset::Multiset;

pub const DEFAULT_SUBTREE_HEIGHT: usize = 2;

/// Multiset of height-limited node-kind fingerprints, one per internal node.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtreeBag {
    pub entries: Multiset<String>,
}

impl SubtreeBag {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Collects one fingerprint per internal node: its kind plus the kinds of its
/// descendants down to `height` levels, serialized as an s-expression.
///
/// Named kinds are written bare; anonymous token kinds are quoted so that
/// punctuation such as `(` cannot collide with the serialization.
pub fn extract_subtrees(tree: &SyntaxTree, height: usize) -> SubtreeBag {
    assert!(height >= 1, "subtree height must be at least 1");
    let mut entries = Multiset::new();
    let mut stack = vec![tree.root()];
    while let Some(node) = stack.pop() {
        let children: Vec<Node<'_>> = structural_children(node).collect();
        if children.is_empty() {
            continue;
        }
        let mut fingerprint = String::new();
        write_fingerprint(node, height, &mut fingerprint);
        entries.insert(fingerprint);
        stack.extend(children.into_iter().rev());
    }
    SubtreeBag { entries }
}

fn write_kind(node: Node<'_>, out: &mut String) {
    if node.is_named() {
        out.push_str(node.kind());
    } else {
        let _ = write!(out, "{:?}", node.kind());
    }
}

fn write_fingerprint(node: Node<'_>, depth_left: usize, out: &mut String) {
    let children: Vec<Node<'_>> = if depth_left == 0 {
        Vec::new()
    } else {
        structural_children(node).collect()
    };
    if children.is_empty() {
        write_kind(node, out);
        return;
    }
    out.push('(');
    write_kind(node, out);
    for child in children {
        out.push(' ');
        write_fingerprint(child, depth_left - 1, out);
    }
    out.push(')');
}
