//! Generic, category-tagged syntax trees and the language adapter registry.

mod minilang;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use minilang::MiniLang;

/// Language tag of the built-in reference grammar.
pub const MINILANG: &str = "minilang";

/// Kind given to the root node by every adapter.
pub const PROGRAM: &str = "Program";
/// Kind of function and method declarations.
pub const FUNCTION: &str = "Function";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Default,
    Primitive,
    Comment,
    Special,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Default => "Default",
            Category::Primitive => "Primitive",
            Category::Comment => "Comment",
            Category::Special => "Special",
        }
    }
}

/// Category of a node kind. Unknown kinds fall through to `Default`.
pub fn classify_kind(kind: &str) -> Category {
    match kind {
        "If" | "While" | "For" | "Switch" | "Try" | "Return" | "Break" | "Continue" => {
            Category::Special
        }
        "StringLit" | "NumberLit" | "IntegerLit" | "FloatLit" | "ByteLit" | "CharLit"
        | "BoolLit" => Category::Primitive,
        "Comment" | "LineComment" | "BlockComment" | "DocComment" => Category::Comment,
        _ => Category::Default,
    }
}

/// 1-based inclusive line range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LineSpan {
    pub start: usize,
    pub end: usize,
}

impl LineSpan {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn lines(&self) -> usize {
        self.end - self.start + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstNode {
    pub kind: String,
    pub label: Option<String>,
    pub category: Category,
    pub children: Vec<AstNode>,
    pub line_span: LineSpan,
}

impl AstNode {
    pub fn new(
        kind: impl Into<String>,
        label: Option<String>,
        line_span: LineSpan,
        children: Vec<AstNode>,
    ) -> Self {
        let kind = kind.into();
        Self {
            category: classify_kind(&kind),
            kind,
            label,
            children,
            line_span,
        }
    }

    pub fn leaf(kind: impl Into<String>, label: impl Into<String>, line: usize) -> Self {
        Self::new(kind, Some(label.into()), LineSpan::new(line, line), Vec::new())
    }

    /// Number of nodes in the subtree, including `self`.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(AstNode::size).sum::<usize>()
    }

    pub fn height(&self) -> usize {
        1 + self.children.iter().map(AstNode::height).max().unwrap_or(0)
    }

    /// Equality of kind, label and children, ignoring line spans.
    pub fn same_structure(&self, other: &AstNode) -> bool {
        self.kind == other.kind
            && self.label == other.label
            && self.children.len() == other.children.len()
            && self
                .children
                .iter()
                .zip(&other.children)
                .all(|(a, b)| a.same_structure(b))
    }

    /// Pre-order traversal.
    pub fn preorder(&self) -> Vec<&AstNode> {
        let mut out = Vec::with_capacity(self.size());
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(n.children.iter().rev());
        }
        out
    }

    /// Indented text rendering, one node per line.
    pub fn dump(&self) -> String {
        fn go(n: &AstNode, depth: usize, out: &mut String) {
            let _ = write!(out, "{:indent$}{}", "", n.kind, indent = depth * 2);
            if let Some(l) = &n.label {
                let _ = write!(out, "({l})");
            }
            let _ = writeln!(
                out,
                " [{}] {}-{}",
                n.category.as_str(),
                n.line_span.start,
                n.line_span.end
            );
            for c in &n.children {
                go(c, depth + 1, out);
            }
        }
        let mut out = String::new();
        go(self, 0, &mut out);
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MethodInfo<'a> {
    pub name: &'a str,
    pub line_span: LineSpan,
    pub loc: usize,
    pub node: &'a AstNode,
}

/// One entry per function declaration, in source order; nested functions
/// are listed separately after their enclosing function.
pub fn extract_methods(ast: &AstNode) -> Vec<MethodInfo<'_>> {
    ast.preorder()
        .into_iter()
        .filter(|n| n.kind == FUNCTION)
        .map(|n| MethodInfo {
            name: n.label.as_deref().unwrap_or(""),
            line_span: n.line_span,
            loc: n.line_span.lines(),
            node: n,
        })
        .collect()
}

/// A parser producing generic trees for one language.
pub trait LanguageAdapter: Send + Sync {
    fn tag(&self) -> &str;
    /// File extensions without the leading dot.
    fn extensions(&self) -> &[&str];
    fn parse(&self, source: &str) -> Result<AstNode>;
}

/// Adapters keyed by tag and by file extension.
#[derive(Clone)]
pub struct Registry {
    by_tag: BTreeMap<String, Arc<dyn LanguageAdapter>>,
    by_ext: BTreeMap<String, String>,
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(MiniLang));
        r
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            by_tag: BTreeMap::new(),
            by_ext: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, adapter: Arc<dyn LanguageAdapter>) {
        for ext in adapter.extensions() {
            self.by_ext.insert((*ext).to_owned(), adapter.tag().to_owned());
        }
        self.by_tag.insert(adapter.tag().to_owned(), adapter);
    }

    pub fn get(&self, tag: &str) -> Option<&dyn LanguageAdapter> {
        self.by_tag.get(tag).map(|a| a.as_ref())
    }

    pub fn for_path(&self, path: &str) -> Option<&dyn LanguageAdapter> {
        let ext = Path::new(path).extension()?.to_str()?;
        self.get(self.by_ext.get(ext)?)
    }

    pub fn extensions(&self) -> impl Iterator<Item = (&str, &str)> {
        self.by_ext.iter().map(|(e, t)| (e.as_str(), t.as_str()))
    }
}

pub fn parse(source: &str, language: &str) -> Result<AstNode> {
    parse_with(&Registry::default(), source, language)
}

pub fn parse_with(registry: &Registry, source: &str, language: &str) -> Result<AstNode> {
    registry
        .get(language)
        .ok_or_else(|| Error::UnknownLanguage(language.to_owned()))?
        .parse(source)
}
