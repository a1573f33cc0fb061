use std::cell::RefCell;

use tree_sitter::{Node, Parser, Tree};

use crate::error::{Error, Result};
use crate::program::{Language, Program};

thread_local! {
    static PYTHON_PARSER: RefCell<Option<Parser>> = const { RefCell::new(None) };
    static JAVA_PARSER: RefCell<Option<Parser>> = const { RefCell::new(None) };
}

fn grammar(language: Language) -> tree_sitter::Language {
    match language {
        Language::Python => tree_sitter_python::LANGUAGE.into(),
        Language::Java => tree_sitter_java::LANGUAGE.into(),
    }
}

/// A parsed concrete syntax tree together with the source it was parsed from.
///
/// Malformed input still yields a tree; unparseable regions show up as
/// `ERROR` nodes and missing tokens as zero-width `MISSING` nodes.
pub struct SyntaxTree {
    tree: Tree,
    source: String,
    language: Language,
}

impl SyntaxTree {
    pub fn root(&self) -> Node<'_> {
        self.tree.root_node()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn has_errors(&self) -> bool {
        self.root().has_error()
    }

    pub fn text(&self, node: Node<'_>) -> &str {
        &self.source[node.byte_range()]
    }

    /// S-expression of the named nodes, mostly useful for debugging and snapshots.
    pub fn to_sexp(&self) -> String {
        self.root().to_sexp()
    }
}

impl std::fmt::Debug for SyntaxTree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SyntaxTree")
            .field("language", &self.language)
            .field("root", &self.root().kind())
            .finish()
    }
}

/// Parses a program with the grammar for its language. Each thread keeps its
/// own parser per language.
pub fn parse_cst(program: &Program) -> Result<SyntaxTree> {
    parse_source(&program.source, program.language)
}

pub fn parse_source(source: &str, language: Language) -> Result<SyntaxTree> {
    let slot = match language {
        Language::Python => &PYTHON_PARSER,
        Language::Java => &JAVA_PARSER,
    };
    let tree = slot.with(|cell| {
        let mut guard = cell.borrow_mut();
        if guard.is_none() {
            let mut parser = Parser::new();
            parser
                .set_language(&grammar(language))
                .map_err(|_| Error::CatastrophicParseFailure)?;
            *guard = Some(parser);
        }
        guard
            .as_mut()
            .and_then(|p| p.parse(source, None))
            .ok_or(Error::CatastrophicParseFailure)
    })?;
    Ok(SyntaxTree {
        tree,
        source: source.to_string(),
        language,
    })
}

/// Children that carry program structure: comments and other extras are skipped.
pub(crate) fn structural_children<'t>(node: Node<'t>) -> impl Iterator<Item = Node<'t>> {
    let mut cursor = node.walk();
    let children: Vec<Node<'t>> = node
        .children(&mut cursor)
        .filter(|c| !is_trivia(*c))
        .collect();
    children.into_iter()
}

fn is_trivia(node: Node<'_>) -> bool {
    (node.is_extra() && !node.is_error()) || node.is_missing()
}
