use std::collections::{BTreeMap, BTreeSet};

use super::{InnerCommit, PullRequestRecord};
use crate::miner::CommitRecord;

/// Trims surrounding whitespace and unifies line endings to `\n`.
pub fn normalize_message(message: &str) -> String {
    message.replace("\r\n", "\n").replace('\r', "\n").trim().to_owned()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchKind {
    Hash,
    Message,
}

/// A repository commit resolved to an inner pull-request commit.
#[derive(Debug, Clone, Copy)]
pub struct PrMatch<'a> {
    pub pr: &'a PullRequestRecord,
    pub inner: &'a InnerCommit,
    /// Zero-based position of `inner` in the PR's inner commits.
    pub position: usize,
    pub kind: MatchKind,
}

/// Lookup tables over inner-commit hashes and normalized messages.
#[derive(Debug, Clone, Default)]
pub struct PrIndex {
    prs: Vec<PullRequestRecord>,
    by_hash: BTreeMap<String, (usize, usize)>,
    by_message: BTreeMap<String, Vec<(usize, usize)>>,
}

impl PrIndex {
    pub fn new(mut prs: Vec<PullRequestRecord>) -> Self {
        prs.sort_by_key(|p| p.number);
        let mut by_hash = BTreeMap::new();
        let mut by_message: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
        for (p, pr) in prs.iter().enumerate() {
            for (i, inner) in pr.inner_commits.iter().enumerate() {
                by_hash.entry(inner.hash.clone()).or_insert((p, i));
                by_message
                    .entry(normalize_message(&inner.message))
                    .or_default()
                    .push((p, i));
            }
        }
        Self {
            prs,
            by_hash,
            by_message,
        }
    }

    pub fn prs(&self) -> &[PullRequestRecord] {
        &self.prs
    }

    pub fn is_empty(&self) -> bool {
        self.prs.is_empty()
    }
}

/// Outcome of resolving one commit.
#[derive(Debug, Clone, Copy)]
pub enum Resolution<'a> {
    Matched(PrMatch<'a>),
    /// The message occurs in several PRs, or repeatedly within one.
    Ambiguous,
    Unmatched,
}

impl<'a> Resolution<'a> {
    pub fn matched(self) -> Option<PrMatch<'a>> {
        match self {
            Resolution::Matched(m) => Some(m),
            _ => None,
        }
    }
}

/// Exact hash first; otherwise a normalized message that is unique within a
/// single PR.
pub fn map_commit_to_pr<'a>(commit: &CommitRecord, index: &'a PrIndex) -> Resolution<'a> {
    let hit = |(p, i): (usize, usize), kind| {
        Resolution::Matched(PrMatch {
            pr: &index.prs[p],
            inner: &index.prs[p].inner_commits[i],
            position: i,
            kind,
        })
    };
    if let Some(&loc) = index.by_hash.get(&commit.hash) {
        return hit(loc, MatchKind::Hash);
    }
    let Some(candidates) = index.by_message.get(&normalize_message(&commit.message)) else {
        return Resolution::Unmatched;
    };
    let prs: BTreeSet<usize> = candidates.iter().map(|(p, _)| *p).collect();
    if prs.len() == 1 && candidates.len() == 1 {
        hit(candidates[0], MatchKind::Message)
    } else {
        Resolution::Ambiguous
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::InnerCommit;

    fn inner(hash: &str, msg: &str, t: i64) -> InnerCommit {
        InnerCommit {
            hash: hash.into(),
            message: msg.into(),
            author_time: t,
            lines_added: 1,
            lines_deleted: 0,
            files: vec![],
        }
    }

    fn pr(number: u64, inners: Vec<InnerCommit>) -> PullRequestRecord {
        PullRequestRecord {
            number,
            created_at: 0,
            merged_at: Some(100),
            merge_commit_hash: None,
            review_requested_at: None,
            inner_commits: inners,
            comments: vec![],
            reviews: vec![],
        }
    }

    fn commit(hash: &str, msg: &str) -> CommitRecord {
        CommitRecord {
            hash: hash.into(),
            parent_hashes: vec![],
            author_id: "a".into(),
            author_time: 50,
            message: msg.into(),
            changes: vec![],
            is_release: false,
        }
    }

    fn index() -> PrIndex {
        PrIndex::new(vec![
            pr(1, vec![inner("aaa", "first", 1), inner("bbb", "Fix parser\r\n\r\nbody", 2)]),
            pr(2, vec![inner("ccc", "shared", 3), inner("ddd", "dup", 4), inner("eee", "dup", 5)]),
            pr(3, vec![inner("fff", "shared", 6), inner("ggg", "Fix parser", 7)]),
        ])
    }

    #[test]
    fn hash_identity() {
        let idx = index();
        let m = map_commit_to_pr(&commit("bbb", "anything"), &idx).matched().unwrap();
        assert_eq!((m.pr.number, m.position, m.kind), (1, 1, MatchKind::Hash));
    }

    #[test]
    fn squashed_commit_matches_by_message() {
        let idx = index();
        let m = map_commit_to_pr(&commit("zzz", "  Fix parser\n\nbody\n"), &idx)
            .matched()
            .unwrap();
        assert_eq!((m.pr.number, m.inner.hash.as_str(), m.kind), (1, "bbb", MatchKind::Message));
    }

    #[test]
    fn hash_beats_message() {
        let idx = index();
        let m = map_commit_to_pr(&commit("ggg", "first"), &idx).matched().unwrap();
        assert_eq!(m.pr.number, 3);
    }

    #[test]
    fn ambiguity_and_no_trace() {
        let idx = index();
        assert!(matches!(map_commit_to_pr(&commit("x", "shared"), &idx), Resolution::Ambiguous));
        assert!(matches!(map_commit_to_pr(&commit("x", "dup"), &idx), Resolution::Ambiguous));
        assert!(matches!(map_commit_to_pr(&commit("x", "other"), &idx), Resolution::Unmatched));
    }
}
