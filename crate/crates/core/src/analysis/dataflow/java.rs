use tree_sitter::Node;

use super::{push_unique, FlowState};
use crate::analysis::cst::{structural_children, SyntaxTree};

pub(super) struct JavaFlow<'a> {
    tree: &'a SyntaxTree,
    state: &'a mut FlowState,
}

impl<'a> JavaFlow<'a> {
    pub(super) fn new(tree: &'a SyntaxTree, state: &'a mut FlowState) -> Self {
        JavaFlow { tree, state }
    }

    pub(super) fn run(mut self) {
        let root = self.tree.root();
        self.statement(root);
    }

    fn text(&self, node: Node<'_>) -> String {
        self.tree.text(node).to_string()
    }

    fn named_children<'t>(node: Node<'t>) -> Vec<Node<'t>> {
        structural_children(node).filter(|c| c.is_named()).collect()
    }

    fn statement(&mut self, node: Node<'_>) {
        match node.kind() {
            "local_variable_declaration" | "field_declaration" | "constant_declaration" => {
                let mut cursor = node.walk();
                let declarators: Vec<Node<'_>> =
                    node.children_by_field_name("declarator", &mut cursor).collect();
                for declarator in declarators {
                    self.declarator(declarator);
                }
            }
            "resource" => {
                let reads = node
                    .child_by_field_name("value")
                    .map(|v| self.reads(v))
                    .unwrap_or_default();
                if let Some(name) = node.child_by_field_name("name") {
                    let name = self.text(name);
                    self.state.define_from(&reads, &[name]);
                }
            }
            "assignment_expression" => {
                self.assignment(node);
            }
            "update_expression" => {
                self.update(node);
            }
            "enhanced_for_statement" => {
                let reads = node
                    .child_by_field_name("value")
                    .map(|v| self.reads(v))
                    .unwrap_or_default();
                if let Some(name) = node.child_by_field_name("name") {
                    let name = self.text(name);
                    self.state.define_from(&reads, &[name]);
                }
                if let Some(body) = node.child_by_field_name("body") {
                    self.statement(body);
                }
            }
            "method_declaration" | "constructor_declaration" | "compact_constructor_declaration" => {
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
            "class_declaration" | "interface_declaration" | "enum_declaration"
            | "record_declaration" | "class_body" => {
                let saved = self.state.enter_scope();
                for child in Self::named_children(node) {
                    self.statement(child);
                }
                self.state.leave_scope(saved);
            }
            "lambda_expression" => {
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
            "catch_formal_parameter" => {
                if let Some(name) = node.child_by_field_name("name") {
                    self.state.define(self.text(name));
                }
            }
            _ => {
                for child in Self::named_children(node) {
                    self.statement(child);
                }
            }
        }
    }

    fn declarator(&mut self, declarator: Node<'_>) {
        let Some(name) = declarator.child_by_field_name("name") else {
            return;
        };
        let name = self.text(name);
        let reads = declarator
            .child_by_field_name("value")
            .map(|v| self.reads(v))
            .unwrap_or_default();
        self.state.define_from(&reads, &[name]);
    }

    fn parameter_names(&self, params: Node<'_>) -> Vec<String> {
        if params.kind() == "identifier" {
            return vec![self.text(params)];
        }
        let mut names = Vec::new();
        for param in Self::named_children(params) {
            let name = match param.kind() {
                "identifier" => Some(param),
                "formal_parameter" => param.child_by_field_name("name"),
                "spread_parameter" => Self::named_children(param)
                    .into_iter()
                    .find(|c| c.kind() == "variable_declarator")
                    .and_then(|d| d.child_by_field_name("name")),
                _ => None,
            };
            if let Some(name) = name {
                names.push(self.text(name));
            }
        }
        names
    }

    /// Handles `left op= right`; returns the assigned names.
    fn assignment(&mut self, node: Node<'_>) -> Vec<String> {
        let mut reads = match node.child_by_field_name("right") {
            Some(right) if right.kind() == "assignment_expression" => self.assignment(right),
            Some(right) => self.reads(right),
            None => Vec::new(),
        };
        let (targets, extra) = node
            .child_by_field_name("left")
            .map(|l| self.targets(l))
            .unwrap_or_default();
        push_unique(&mut reads, extra);
        let compound = node
            .child_by_field_name("operator")
            .is_some_and(|op| op.kind() != "=");
        if compound {
            let prior: Vec<String> = targets
                .iter()
                .filter(|t| self.state.is_defined(t))
                .cloned()
                .collect();
            push_unique(&mut reads, prior);
        }
        self.state.define_from(&reads, &targets);
        targets
    }

    fn update(&mut self, node: Node<'_>) -> Vec<String> {
        let Some(operand) = Self::named_children(node).into_iter().next() else {
            return Vec::new();
        };
        let (targets, mut reads) = self.targets(operand);
        let prior: Vec<String> = targets
            .iter()
            .filter(|t| self.state.is_defined(t))
            .cloned()
            .collect();
        push_unique(&mut reads, prior);
        self.state.define_from(&reads, &targets);
        targets
    }

    fn targets(&mut self, node: Node<'_>) -> (Vec<String>, Vec<String>) {
        let mut defs = Vec::new();
        let mut reads = Vec::new();
        self.collect_targets(node, &mut defs, &mut reads);
        (defs, reads)
    }

    fn collect_targets(&mut self, node: Node<'_>, defs: &mut Vec<String>, reads: &mut Vec<String>) {
        match node.kind() {
            "identifier" => push_unique(defs, [self.text(node)]),
            "field_access" => match node.child_by_field_name("object") {
                // `this.x` names the field itself
                Some(object) if object.kind() == "this" => {
                    if let Some(field) = node.child_by_field_name("field") {
                        push_unique(defs, [self.text(field)]);
                    }
                }
                Some(object) => self.collect_targets(object, defs, reads),
                None => {}
            },
            "array_access" => {
                if let Some(array) = node.child_by_field_name("array") {
                    self.collect_targets(array, defs, reads);
                }
                if let Some(index) = node.child_by_field_name("index") {
                    let r = self.reads(index);
                    push_unique(reads, r);
                }
            }
            "parenthesized_expression" => {
                for child in Self::named_children(node) {
                    self.collect_targets(child, defs, reads);
                }
            }
            _ => {}
        }
    }

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
            "field_access" => match node.child_by_field_name("object") {
                Some(object) if object.kind() == "this" => {
                    if let Some(field) = node.child_by_field_name("field") {
                        self.collect_reads(field, out);
                    }
                }
                Some(object) => self.collect_reads(object, out),
                None => {}
            },
            "method_invocation" => {
                for field in ["object", "arguments"] {
                    if let Some(child) = node.child_by_field_name(field) {
                        self.collect_reads(child, out);
                    }
                }
            }
            "method_reference" => {
                if let Some(first) = Self::named_children(node).into_iter().next() {
                    self.collect_reads(first, out);
                }
            }
            "assignment_expression" => {
                let assigned = self.assignment(node);
                push_unique(out, assigned);
            }
            "update_expression" => {
                let updated = self.update(node);
                push_unique(out, updated);
            }
            "lambda_expression" => {
                let params = node
                    .child_by_field_name("parameters")
                    .map(|p| self.parameter_names(p))
                    .unwrap_or_default();
                if let Some(body) = node.child_by_field_name("body") {
                    let inner = self.reads(body);
                    push_unique(out, inner.into_iter().filter(|n| !params.contains(n)));
                }
            }
            "class_body" => {}
            _ => {
                for child in Self::named_children(node) {
                    self.collect_reads(child, out);
                }
            }
        }
    }
}
