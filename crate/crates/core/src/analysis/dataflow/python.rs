use tree_sitter::Node;

use super::{push_unique, FlowState};
use crate::analysis::cst::{structural_children, SyntaxTree};

const COMPREHENSIONS: &[&str] = &[
    "list_comprehension",
    "set_comprehension",
    "dictionary_comprehension",
    "generator_expression",
];

pub(super) struct PythonFlow<'a> {
    tree: &'a SyntaxTree,
    state: &'a mut FlowState,
}

impl<'a> PythonFlow<'a> {
    pub(super) fn new(tree: &'a SyntaxTree, state: &'a mut FlowState) -> Self {
        PythonFlow { tree, state }
    }

    pub(super) fn run(mut self) {
        let root = self.tree.root();
        self.statement(root);
    }

    fn text(&self, node: Node<'_>) -> String {
        self.tree.text(node).to_string()
    }

    fn statement(&mut self, node: Node<'_>) {
        match node.kind() {
            "assignment" => {
                self.assignment(node);
            }
            "augmented_assignment" => self.augmented_assignment(node),
            "for_statement" => {
                let (targets, extra) = node
                    .child_by_field_name("left")
                    .map(|n| self.targets(n))
                    .unwrap_or_default();
                let mut reads = node
                    .child_by_field_name("right")
                    .map(|n| self.reads(n))
                    .unwrap_or_default();
                push_unique(&mut reads, extra);
                self.state.define_from(&reads, &targets);
                for field in ["body", "alternative"] {
                    if let Some(child) = node.child_by_field_name(field) {
                        self.statement(child);
                    }
                }
            }
            "function_definition" => {
                if let Some(name) = node.child_by_field_name("name") {
                    self.state.define(self.text(name));
                }
                let saved = self.state.enter_scope();
                if let Some(params) = node.child_by_field_name("parameters") {
                    for name in self.parameter_names(params) {
                        self.state.define(name);
                    }
                }
                if let Some(body) = node.child_by_field_name("body") {
                    self.statement(body);
                }
                self.state.leave_scope(saved);
            }
            "class_definition" => {
                if let Some(name) = node.child_by_field_name("name") {
                    self.state.define(self.text(name));
                }
                let saved = self.state.enter_scope();
                if let Some(body) = node.child_by_field_name("body") {
                    self.statement(body);
                }
                self.state.leave_scope(saved);
            }
            "import_statement" | "import_from_statement" => self.import(node),
            "as_pattern" => {
                let reads = structural_children(node)
                    .find(|c| c.is_named() && c.kind() != "as_pattern_target")
                    .map(|n| self.reads(n))
                    .unwrap_or_default();
                let targets = node
                    .child_by_field_name("alias")
                    .map(|n| self.targets(n).0)
                    .unwrap_or_default();
                self.state.define_from(&reads, &targets);
            }
            "named_expression" => {
                self.reads(node);
            }
            "lambda" | "global_statement" | "nonlocal_statement" => {}
            kind if COMPREHENSIONS.contains(&kind) => {
                self.reads(node);
            }
            _ => {
                for child in structural_children(node).filter(|c| c.is_named()) {
                    self.statement(child);
                }
            }
        }
    }

    /// Handles `left = right`, including chains; returns the defined names.
    fn assignment(&mut self, node: Node<'_>) -> Vec<String> {
        let Some(right) = node.child_by_field_name("right") else {
            return Vec::new();
        };
        let mut reads = if right.kind() == "assignment" {
            self.assignment(right)
        } else {
            self.reads(right)
        };
        let (targets, extra) = node
            .child_by_field_name("left")
            .map(|n| self.targets(n))
            .unwrap_or_default();
        push_unique(&mut reads, extra);
        self.state.define_from(&reads, &targets);
        targets
    }

    fn augmented_assignment(&mut self, node: Node<'_>) {
        let mut reads = node
            .child_by_field_name("right")
            .map(|n| self.reads(n))
            .unwrap_or_default();
        let (targets, extra) = node
            .child_by_field_name("left")
            .map(|n| self.targets(n))
            .unwrap_or_default();
        push_unique(&mut reads, extra);
        let prior: Vec<String> = targets
            .iter()
            .filter(|t| self.state.is_defined(t))
            .cloned()
            .collect();
        push_unique(&mut reads, prior);
        self.state.define_from(&reads, &targets);
    }

    fn import(&mut self, node: Node<'_>) {
        let mut cursor = node.walk();
        let names: Vec<Node<'_>> = node.children_by_field_name("name", &mut cursor).collect();
        for name in names {
            let bound = match name.kind() {
                "aliased_import" => name.child_by_field_name("alias").map(|a| self.text(a)),
                // `import a.b` binds `a`
                "dotted_name" => name.named_child(0).map(|first| self.text(first)),
                _ => None,
            };
            if let Some(bound) = bound {
                self.state.define(bound);
            }
        }
    }

    fn parameter_names(&self, params: Node<'_>) -> Vec<String> {
        let mut names = Vec::new();
        for param in structural_children(params).filter(|c| c.is_named()) {
            let name = match param.kind() {
                "identifier" => Some(param),
                "default_parameter" | "typed_default_parameter" => {
                    param.child_by_field_name("name")
                }
                "typed_parameter" | "list_splat_pattern" | "dictionary_splat_pattern" => {
                    structural_children(param).find(|c| c.kind() == "identifier")
                }
                _ => None,
            };
            if let Some(name) = name {
                names.push(self.text(name));
            }
        }
        names
    }

    /// Names bound by an assignment target, plus names read while evaluating
    /// it (subscript indices).
    fn targets(&mut self, node: Node<'_>) -> (Vec<String>, Vec<String>) {
        let mut defs = Vec::new();
        let mut reads = Vec::new();
        self.collect_targets(node, &mut defs, &mut reads);
        (defs, reads)
    }

    fn collect_targets(&mut self, node: Node<'_>, defs: &mut Vec<String>, reads: &mut Vec<String>) {
        match node.kind() {
            "identifier" => push_unique(defs, [self.text(node)]),
            "attribute" => {
                if let Some(object) = node.child_by_field_name("object") {
                    self.collect_targets(object, defs, reads);
                }
            }
            "subscript" => {
                if let Some(value) = node.child_by_field_name("value") {
                    self.collect_targets(value, defs, reads);
                }
                let mut cursor = node.walk();
                let indices: Vec<Node<'_>> =
                    node.children_by_field_name("subscript", &mut cursor).collect();
                for index in indices {
                    let r = self.reads(index);
                    push_unique(reads, r);
                }
            }
            "pattern_list" | "tuple_pattern" | "list_pattern" | "tuple" | "list"
            | "expression_list" | "list_splat_pattern" | "list_splat" | "parenthesized_expression"
            | "as_pattern_target" => {
                for child in structural_children(node).filter(|c| c.is_named()) {
                    self.collect_targets(child, defs, reads);
                }
            }
            _ => {}
        }
    }

    /// Variables read by an expression that already have a visible definition.
    fn reads(&mut self, node: Node<'_>) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_reads(node, &mut out);
        out
    }

    fn collect_reads(&mut self, node: Node<'_>, out: &mut Vec<String>) {
        match node.kind() {
            "identifier" => {
                let name = self.text(node);
                if self.state.is_defined(&name) {
                    push_unique(out, [name]);
                }
            }
            "attribute" => {
                if let Some(object) = node.child_by_field_name("object") {
                    self.collect_reads(object, out);
                }
            }
            "keyword_argument" => {
                if let Some(value) = node.child_by_field_name("value") {
                    self.collect_reads(value, out);
                }
            }
            "named_expression" => {
                let reads = node
                    .child_by_field_name("value")
                    .map(|v| self.reads(v))
                    .unwrap_or_default();
                if let Some(name) = node.child_by_field_name("name") {
                    let name = self.text(name);
                    self.state.define_from(&reads, std::slice::from_ref(&name));
                    push_unique(out, [name]);
                }
            }
            "lambda" => {
                let params = node
                    .child_by_field_name("parameters")
                    .map(|p| self.parameter_names(p))
                    .unwrap_or_default();
                if let Some(body) = node.child_by_field_name("body") {
                    let inner = self.reads(body);
                    push_unique(out, inner.into_iter().filter(|n| !params.contains(n)));
                }
            }
            kind if COMPREHENSIONS.contains(&kind) => self.comprehension(node, out),
            _ => {
                for child in structural_children(node).filter(|c| c.is_named()) {
                    self.collect_reads(child, out);
                }
            }
        }
    }

    /// Clause variables receive edges from their iterables and are local to
    /// the comprehension.
    fn comprehension(&mut self, node: Node<'_>, out: &mut Vec<String>) {
        let saved = self.state.enter_scope();
        let mut bound: Vec<String> = Vec::new();
        let mut reads: Vec<String> = Vec::new();
        let children: Vec<Node<'_>> = structural_children(node).filter(|c| c.is_named()).collect();
        for clause in children.iter().filter(|c| c.kind() == "for_in_clause") {
            let iter_reads = clause
                .child_by_field_name("right")
                .map(|r| self.reads(r))
                .unwrap_or_default();
            let (targets, _) = clause
                .child_by_field_name("left")
                .map(|l| self.targets(l))
                .unwrap_or_default();
            self.state.define_from(&iter_reads, &targets);
            push_unique(&mut reads, iter_reads);
            push_unique(&mut bound, targets);
        }
        for child in children.iter().filter(|c| c.kind() != "for_in_clause") {
            let r = self.reads(*child);
            push_unique(&mut reads, r);
        }
        self.state.leave_scope(saved);
        push_unique(out, reads.into_iter().filter(|n| !bound.contains(n)));
    }
}
