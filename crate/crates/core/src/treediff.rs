//! Edit scripts between two syntax trees.
//!
//! Matching runs in two phases:
//!
//! 1. Identical subtrees (same kind, label and children, spans ignored) of
//!    height ≥ 2 are matched tallest first, when the subtree occurs exactly
//!    once among the unmatched nodes of each side.
//! 2. Starting from the matched roots, the children of every newly matched
//!    pair are aligned by a longest common subsequence on kind. Aligned
//!    children are matched and recursed into.
//!
//! Matched pairs whose labels differ are updates; unmatched nodes of the
//! after tree are adds, unmatched nodes of the before tree are deletes. The
//! LCS tie-break depends only on the two elements compared, so
//! `diff_trees(b, a)` mirrors `diff_trees(a, b)`.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::Serialize;

use crate::ast::{AstNode, Category, FUNCTION};

const MIN_PHASE1_HEIGHT: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeRef {
    /// Pre-order index in its tree.
    pub index: usize,
    pub kind: String,
    pub label: Option<String>,
    pub category: Category,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScriptEntry {
    pub node: NodeRef,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UpdateEntry {
    pub before: NodeRef,
    pub after: NodeRef,
    pub category: Category,
    /// Larger of the two nodes' depths.
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Add,
    Delete,
    Update,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Add => "add",
            Action::Delete => "delete",
            Action::Update => "update",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EditScript {
    pub adds: Vec<ScriptEntry>,
    pub deletes: Vec<ScriptEntry>,
    pub updates: Vec<UpdateEntry>,
    /// Matched (before, after) pre-order indices, sorted by before index.
    pub match_map: Vec<(usize, usize)>,
}

impl EditScript {
    pub fn is_empty(&self) -> bool {
        self.adds.is_empty() && self.deletes.is_empty() && self.updates.is_empty()
    }

    pub fn count(&self, action: Action, category: Option<Category>) -> usize {
        let keep = |c: Category| category.is_none_or(|want| want == c);
        match action {
            Action::Add => self.adds.iter().filter(|e| keep(e.node.category)).count(),
            Action::Delete => self.deletes.iter().filter(|e| keep(e.node.category)).count(),
            Action::Update => self.updates.iter().filter(|e| keep(e.category)).count(),
        }
    }

    /// One JSON object per action: action, kind, category, depth, line.
    pub fn to_jsonl(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            action: &'a str,
            kind: &'a str,
            category: &'a str,
            depth: usize,
            line: usize,
        }
        let mut out = String::new();
        let mut push = |action: Action, node: &NodeRef, category: Category, depth: usize| {
            let l = Line {
                action: action.as_str(),
                kind: &node.kind,
                category: category.as_str(),
                depth,
                line: node.line,
            };
            out.push_str(&serde_json::to_string(&l).expect("plain struct"));
            out.push('\n');
        };
        for e in &self.deletes {
            push(Action::Delete, &e.node, e.node.category, e.depth);
        }
        for e in &self.adds {
            push(Action::Add, &e.node, e.node.category, e.depth);
        }
        for e in &self.updates {
            push(Action::Update, &e.after, e.category, e.depth);
        }
        out
    }
}

/// Maximum depth over one action list, 0 when empty.
pub fn max_change_depth(script: &EditScript, action: Action) -> usize {
    match action {
        Action::Add => script.adds.iter().map(|e| e.depth).max(),
        Action::Delete => script.deletes.iter().map(|e| e.depth).max(),
        Action::Update => script.updates.iter().map(|e| e.depth).max(),
    }
    .unwrap_or(0)
}

struct Flat<'a> {
    node: &'a AstNode,
    children: Vec<usize>,
    height: usize,
    /// Structure id shared across both trees.
    shape: usize,
    depth: usize,
}

#[derive(Default)]
struct Interner<'a> {
    ids: HashMap<(&'a str, Option<&'a str>, Vec<usize>), usize>,
}

impl<'a> Interner<'a> {
    fn id(&mut self, node: &'a AstNode, child_ids: Vec<usize>) -> usize {
        let next = self.ids.len();
        *self
            .ids
            .entry((node.kind.as_str(), node.label.as_deref(), child_ids))
            .or_insert(next)
    }
}

fn flatten<'a>(root: &'a AstNode, interner: &mut Interner<'a>) -> Vec<Flat<'a>> {
    let mut flat: Vec<Flat<'a>> = Vec::with_capacity(root.size());
    // (node, parent, depth from enclosing function or root)
    let mut stack: Vec<(&AstNode, Option<usize>, usize)> = vec![(root, None, 0)];
    while let Some((node, parent, depth)) = stack.pop() {
        let depth = if node.kind == FUNCTION { 0 } else { depth };
        let idx = flat.len();
        flat.push(Flat {
            node,
            children: Vec::new(),
            height: 1,
            shape: 0,
            depth,
        });
        if let Some(p) = parent {
            flat[p].children.push(idx);
        }
        for c in node.children.iter().rev() {
            stack.push((c, Some(idx), depth + 1));
        }
    }
    for i in (0..flat.len()).rev() {
        let child_ids: Vec<usize> = flat[i].children.iter().map(|&c| flat[c].shape).collect();
        let height = 1 + flat[i]
            .children
            .iter()
            .map(|&c| flat[c].height)
            .max()
            .unwrap_or(0);
        flat[i].shape = interner.id(flat[i].node, child_ids);
        flat[i].height = height;
    }
    flat
}

fn node_ref(f: &Flat<'_>, index: usize) -> NodeRef {
    NodeRef {
        index,
        kind: f.node.kind.clone(),
        label: f.node.label.clone(),
        category: f.node.category,
        line: f.node.line_span.start,
    }
}

struct Matcher<'a> {
    a: Vec<Flat<'a>>,
    b: Vec<Flat<'a>>,
    a_to_b: Vec<Option<usize>>,
    b_to_a: Vec<Option<usize>>,
}

impl Matcher<'_> {
    fn link(&mut self, i: usize, j: usize) {
        self.a_to_b[i] = Some(j);
        self.b_to_a[j] = Some(i);
    }

    fn link_subtrees(&mut self, i: usize, j: usize) {
        let mut stack = vec![(i, j)];
        while let Some((x, y)) = stack.pop() {
            self.link(x, y);
            for (&cx, &cy) in self.a[x].children.iter().zip(&self.b[y].children) {
                stack.push((cx, cy));
            }
        }
    }

    fn identical_subtrees(&mut self) {
        let max_h = self.a[0].height.max(self.b[0].height);
        for h in (MIN_PHASE1_HEIGHT..=max_h).rev() {
            let mut groups: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
            for (i, f) in self.a.iter().enumerate() {
                if f.height == h && self.a_to_b[i].is_none() {
                    groups.entry(f.shape).or_default().0.push(i);
                }
            }
            for (j, f) in self.b.iter().enumerate() {
                if f.height == h && self.b_to_a[j].is_none() {
                    groups.entry(f.shape).or_default().1.push(j);
                }
            }
            for (xs, ys) in groups.into_values() {
                if let ([i], [j]) = (xs.as_slice(), ys.as_slice()) {
                    self.link_subtrees(*i, *j);
                }
            }
        }
    }

    fn align_children(&mut self) {
        let mut queue = VecDeque::new();
        if self.a_to_b[0].is_none()
            && self.b_to_a[0].is_none()
            && self.a[0].node.kind == self.b[0].node.kind
        {
            self.link(0, 0);
            queue.push_back((0, 0));
        }
        while let Some((p, q)) = queue.pop_front() {
            let xs = self.a[p].children.clone();
            let ys = self.b[q].children.clone();
            for (i, j) in self.lcs(&xs, &ys) {
                if self.a_to_b[i].is_none() {
                    self.link(i, j);
                    queue.push_back((i, j));
                }
            }
        }
    }

    fn eq(&self, i: usize, j: usize) -> bool {
        match (self.a_to_b[i], self.b_to_a[j]) {
            (Some(m), _) => m == j,
            (None, None) => self.a[i].node.kind == self.b[j].node.kind,
            (None, Some(_)) => false,
        }
    }

    /// Aligned pairs of two child lists, in order.
    fn lcs(&self, xs: &[usize], ys: &[usize]) -> Vec<(usize, usize)> {
        let (n, m) = (xs.len(), ys.len());
        let mut dp = vec![vec![0u32; m + 1]; n + 1];
        for i in 1..=n {
            for j in 1..=m {
                dp[i][j] = if self.eq(xs[i - 1], ys[j - 1]) {
                    dp[i - 1][j - 1] + 1
                } else {
                    dp[i - 1][j].max(dp[i][j - 1])
                };
            }
        }
        // a node anchored outside this pair of lists can never be aligned here
        let a_free = |i: usize| self.a_to_b[i].is_none_or(|m| ys.contains(&m));
        let b_free = |j: usize| self.b_to_a[j].is_none_or(|m| xs.contains(&m));
        let a_key = |i: usize| {
            let f = &self.a[i];
            (f.node.kind.as_str(), self.a_to_b[i].is_some(), f.shape)
        };
        let b_key = |j: usize| {
            let f = &self.b[j];
            (f.node.kind.as_str(), self.b_to_a[j].is_some(), f.shape)
        };
        let mut out = Vec::new();
        let (mut i, mut j) = (n, m);
        while i > 0 && j > 0 {
            let (x, y) = (xs[i - 1], ys[j - 1]);
            if self.eq(x, y) {
                out.push((x, y));
                i -= 1;
                j -= 1;
                continue;
            }
            let (fa, fb) = (a_free(x), b_free(y));
            if !fa || !fb {
                if !fa {
                    i -= 1;
                }
                if !fb {
                    j -= 1;
                }
                continue;
            }
            let (up, left) = (dp[i - 1][j], dp[i][j - 1]);
            if up > left || (up == left && a_key(x) > b_key(y)) {
                i -= 1;
            } else {
                j -= 1;
            }
        }
        out.reverse();
        out
    }
}

/// Edit script turning `before` into `after`.
pub fn diff_trees(before: &AstNode, after: &AstNode) -> EditScript {
    let mut interner = Interner::default();
    let a = flatten(before, &mut interner);
    let b = flatten(after, &mut interner);
    let mut m = Matcher {
        a_to_b: vec![None; a.len()],
        b_to_a: vec![None; b.len()],
        a,
        b,
    };
    m.identical_subtrees();
    m.align_children();

    let mut script = EditScript::default();
    for (i, f) in m.a.iter().enumerate() {
        match m.a_to_b[i] {
            None => script.deletes.push(ScriptEntry {
                node: node_ref(f, i),
                depth: f.depth,
            }),
            Some(j) => {
                script.match_map.push((i, j));
                let g = &m.b[j];
                if f.node.label != g.node.label {
                    script.updates.push(UpdateEntry {
                        before: node_ref(f, i),
                        after: node_ref(g, j),
                        category: f.node.category,
                        depth: f.depth.max(g.depth),
                    });
                }
            }
        }
    }
    for (j, g) in m.b.iter().enumerate() {
        if m.b_to_a[j].is_none() {
            script.adds.push(ScriptEntry {
                node: node_ref(g, j),
                depth: g.depth,
            });
        }
    }
    script
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{parse, MINILANG};

    fn p(src: &str) -> AstNode {
        parse(src, MINILANG).unwrap()
    }

    #[test]
    fn identity_is_empty() {
        let t = p("fn f(a) { if (a) { return 1; } x = g(a, \"s\"); }");
        let s = diff_trees(&t, &t);
        assert!(s.is_empty());
        assert_eq!(s.match_map.len(), t.size());
    }

    #[test]
    fn insertion_only() {
        let empty = p("");
        let t = p("fn f(a) { return a + 1; }");
        let s = diff_trees(&empty, &t);
        assert_eq!(s.adds.len(), t.size() - 1);
        assert!(s.deletes.is_empty());
        assert!(s.updates.is_empty());
    }

    #[test]
    fn literal_inserted_into_call_on_same_line() {
        let before = p("fn f(a) {\n  x = g(a);\n  return x;\n}\n");
        let after = p("fn f(a) {\n  x = g(a, 7);\n  return x;\n}\n");
        let s = diff_trees(&before, &after);
        assert_eq!(s.adds.len(), 1);
        assert_eq!(s.adds[0].node.kind, "NumberLit");
        assert_eq!(s.adds[0].node.category, Category::Primitive);
        // Function > Block > Assign > Call > NumberLit
        assert_eq!(s.adds[0].depth, 4);
        assert!(s.deletes.is_empty());
        assert!(s.updates.is_empty());
    }

    #[test]
    fn depth_of_deep_literal() {
        let before = p("fn f(a) { return a; }");
        let after = p("fn f(a) { return a + 1; }");
        let s = diff_trees(&before, &after);
        let lit = s.adds.iter().find(|e| e.node.kind == "NumberLit").unwrap();
        assert_eq!(lit.depth, 4);
        assert_eq!(max_change_depth(&s, Action::Add), 4);
    }

    #[test]
    fn empty_script_depths_are_zero() {
        let s = EditScript::default();
        for a in [Action::Add, Action::Delete, Action::Update] {
            assert_eq!(max_change_depth(&s, a), 0);
        }
    }

    #[test]
    fn node_directly_under_function() {
        let before = p("fn f() { }");
        let after = p("fn f(a) { }");
        let s = diff_trees(&before, &after);
        assert_eq!(s.adds.len(), 1);
        assert_eq!(s.adds[0].node.kind, "Param");
        assert_eq!(max_change_depth(&s, Action::Add), 1);
    }

    #[test]
    fn label_change_is_update_kind_change_is_delete_add() {
        let s = diff_trees(&p("x = 1;"), &p("x = 2;"));
        assert_eq!((s.adds.len(), s.deletes.len(), s.updates.len()), (0, 0, 1));
        assert_eq!(s.updates[0].category, Category::Primitive);
        let s = diff_trees(&p("x = 1;"), &p("x = \"1\";"));
        assert_eq!((s.adds.len(), s.deletes.len(), s.updates.len()), (1, 1, 0));
    }

    #[test]
    fn crossing_children_are_mirrored() {
        let a = p("x = 1; y = 2; while (c) { z = 3; }");
        let b = p("while (c) { z = 3; } x = 1; y = 2;");
        let fwd = diff_trees(&a, &b);
        let bwd = diff_trees(&b, &a);
        let kinds = |v: &[ScriptEntry]| {
            let mut k: Vec<_> = v.iter().map(|e| (e.node.kind.clone(), e.node.label.clone())).collect();
            k.sort();
            k
        };
        assert_eq!(kinds(&fwd.adds), kinds(&bwd.deletes));
        assert_eq!(kinds(&fwd.deletes), kinds(&bwd.adds));
    }

    #[test]
    fn jsonl_lines() {
        let s = diff_trees(&p("x = 1;"), &p("x = 2; // c"));
        let text = s.to_jsonl();
        assert_eq!(
            text,
            "{\"action\":\"add\",\"kind\":\"LineComment\",\"category\":\"Comment\",\"depth\":1,\"line\":1}\n\
{\"action\":\"update\",\"kind\":\"NumberLit\",\"category\":\"Primitive\",\"depth\":2,\"line\":1}\n"
        );
    }
}
