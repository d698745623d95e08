use std::collections::BTreeMap;

use crate::ast::{extract_methods, AstNode, Category, MethodInfo, Registry};
use crate::miner::{CommitRecord, FileChange};
use crate::treediff::{diff_trees, max_change_depth, Action, EditScript};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PathFeatures {
    pub fun: f64,
    pub funt: f64,
    pub fundiff: f64,
    pub funa: f64,
    pub fund: f64,
    pub funu: f64,
    pub asta: f64,
    pub astd: f64,
    pub astu: f64,
    pub sasta: f64,
    pub sastd: f64,
    pub casta: f64,
    pub castd: f64,
    pub pasta: f64,
    pub pastd: f64,
    pub deptha: f64,
    pub depthd: f64,
    pub depthu: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathStats {
    pub features: PathFeatures,
    pub parse_failures: usize,
}

/// Before/after trees of a changed file, `None` when the file has no
/// adapter or lost its snapshots.
fn trees(change: &FileChange, registry: &Registry) -> Option<crate::Result<(AstNode, AstNode)>> {
    let adapter = registry.for_path(&change.path)?;
    if change.before_text.is_none() && change.after_text.is_none() {
        return None;
    }
    let parse = |t: &Option<String>| adapter.parse(t.as_deref().unwrap_or(""));
    Some(parse(&change.before_text).and_then(|b| Ok((b, parse(&change.after_text)?))))
}

/// Pairs methods by name, then by source order among equal names.
fn pair_methods<'a>(
    before: &[MethodInfo<'a>],
    after: &[MethodInfo<'a>],
) -> (Vec<(MethodInfo<'a>, MethodInfo<'a>)>, usize, usize) {
    let mut groups: BTreeMap<&str, (Vec<MethodInfo<'a>>, Vec<MethodInfo<'a>>)> = BTreeMap::new();
    for m in before {
        groups.entry(m.name).or_default().0.push(*m);
    }
    for m in after {
        groups.entry(m.name).or_default().1.push(*m);
    }
    let (mut pairs, mut added, mut deleted) = (Vec::new(), 0, 0);
    for (b, a) in groups.into_values() {
        let common = b.len().min(a.len());
        pairs.extend(b.iter().copied().zip(a.iter().copied()));
        added += a.len() - common;
        deleted += b.len() - common;
    }
    (pairs, added, deleted)
}

fn accumulate(acc: &mut PathFeatures, before: &AstNode, after: &AstNode) {
    let mb = extract_methods(before);
    let ma = extract_methods(after);
    let funt_before: usize = mb.iter().map(|m| m.loc).sum();
    let funt_after: usize = ma.iter().map(|m| m.loc).sum();
    let (pairs, added, deleted) = pair_methods(&mb, &ma);
    acc.fun += mb.len() as f64;
    acc.funt += funt_before as f64;
    acc.fundiff += funt_after as f64 - funt_before as f64;
    acc.funa += added as f64;
    acc.fund += deleted as f64;
    acc.funu += pairs
        .iter()
        .filter(|(b, a)| !diff_trees(b.node, a.node).is_empty())
        .count() as f64;

    let s: EditScript = diff_trees(before, after);
    acc.asta += s.count(Action::Add, None) as f64;
    acc.astd += s.count(Action::Delete, None) as f64;
    acc.astu += s.count(Action::Update, None) as f64;
    acc.sasta += s.count(Action::Add, Some(Category::Special)) as f64;
    acc.sastd += s.count(Action::Delete, Some(Category::Special)) as f64;
    acc.casta += s.count(Action::Add, Some(Category::Comment)) as f64;
    acc.castd += s.count(Action::Delete, Some(Category::Comment)) as f64;
    acc.pasta += s.count(Action::Add, Some(Category::Primitive)) as f64;
    acc.pastd += s.count(Action::Delete, Some(Category::Primitive)) as f64;
    acc.deptha = acc.deptha.max(max_change_depth(&s, Action::Add) as f64);
    acc.depthd = acc.depthd.max(max_change_depth(&s, Action::Delete) as f64);
    acc.depthu = acc.depthu.max(max_change_depth(&s, Action::Update) as f64);
}

/// AST-change features summed over the commit's parseable files (depths are
/// maximized). Files whose trees are structurally unchanged, files without
/// an adapter and files that fail to parse contribute nothing.
pub fn path_features(commit: &CommitRecord, registry: &Registry) -> PathStats {
    let mut stats = PathStats::default();
    for change in &commit.changes {
        match trees(change, registry) {
            None => {}
            Some(Err(e)) => {
                log::warn!("{}: {}: {e}", commit.hash, change.path);
                stats.parse_failures += 1;
            }
            Some(Ok((before, after))) => {
                if !before.same_structure(&after) {
                    accumulate(&mut stats.features, &before, &after);
                }
            }
        }
    }
    stats
}
