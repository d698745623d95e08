//! Review (SotA) and development-workflow features. Only pull-request events
//! strictly before the change time count; the change time of a matched
//! commit is its inner commit's author time.

use std::collections::{BTreeMap, BTreeSet};

use super::history::HistoryIndex;
use super::size::entropy;
use crate::forge::{directory_of, subsystem_of, PrMatch, ReviewState};
use crate::miner::CommitRecord;
use crate::HOUR;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Review {
    pub iter: f64,
    pub nrev: f64,
    pub ncom: f64,
    /// Hours from review request to final approval.
    pub agerev: f64,
}

pub fn review(pr_match: Option<&PrMatch<'_>>) -> Review {
    let Some(m) = pr_match else {
        return Review::default();
    };
    let t = m.inner.author_time;
    let reviews: Vec<_> = m.pr.reviews.iter().filter(|r| r.submitted_at < t).collect();
    let reviewers: BTreeSet<&str> = reviews.iter().map(|r| r.reviewer_id.as_str()).collect();
    let approved = reviews
        .iter()
        .filter(|r| r.state == ReviewState::Approved)
        .map(|r| r.submitted_at)
        .max();
    let end = approved.or(m.pr.merged_at.filter(|&mt| mt < t));
    let agerev = match end {
        Some(e) => ((e - m.pr.review_requested()) as f64 / HOUR).max(0.0),
        None => 0.0,
    };
    Review {
        iter: reviews.len() as f64,
        nrev: reviewers.len() as f64,
        ncom: reviews.iter().map(|r| r.comment_count).sum::<u64>() as f64,
        agerev,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Workflow {
    pub dur: f64,
    pub nth: f64,
    pub c_la: f64,
    pub c_ld: f64,
    pub share: f64,
    pub c_ns: f64,
    pub c_nd: f64,
    pub c_nf: f64,
    pub c_ent: f64,
    pub rel_nth: f64,
    pub rel_dur: f64,
    pub dev_nth: f64,
    pub dev_dur: f64,
    pub prcom: f64,
    pub prcom_r: f64,
}

pub fn workflow(
    commit: &CommitRecord,
    pr_match: Option<&PrMatch<'_>>,
    index: &HistoryIndex,
) -> Workflow {
    let mut w = Workflow::default();
    let pos = index.position();
    if let Some((rel_pos, rel_time)) = index.last_release() {
        w.rel_nth = (pos - rel_pos) as f64;
        w.rel_dur = (commit.author_time - rel_time).max(0) as f64 / HOUR;
    }
    if let Some((dev_pos, dev_time)) = index.author_last(&commit.author_id) {
        w.dev_nth = (pos - dev_pos) as f64;
        w.dev_dur = (commit.author_time - dev_time).max(0) as f64 / HOUR;
    }
    let Some(m) = pr_match else {
        return w;
    };
    let t = m.inner.author_time;
    let upto = &m.pr.inner_commits[..=m.position];
    let first = m
        .pr
        .inner_commits
        .first()
        .map_or(m.pr.created_at, |c| c.author_time.min(m.pr.created_at));
    w.nth = (m.position + 1) as f64;
    w.dur = (t - first).max(0) as f64 / HOUR;
    let c_la: u64 = upto.iter().map(|c| c.lines_added).sum();
    let c_ld: u64 = upto.iter().map(|c| c.lines_deleted).sum();
    w.c_la = c_la as f64;
    w.c_ld = c_ld as f64;
    w.share = if c_la + c_ld == 0 {
        0.0
    } else {
        m.inner.churn() as f64 / (c_la + c_ld) as f64
    };
    let mut per_file: BTreeMap<&str, u64> = BTreeMap::new();
    for c in upto {
        for f in &c.files {
            *per_file.entry(f.path.as_str()).or_default() += f.lines_added + f.lines_deleted;
        }
    }
    let subsystems: BTreeSet<String> = per_file.keys().map(|p| subsystem_of(p)).collect();
    let dirs: BTreeSet<String> = per_file.keys().map(|p| directory_of(p)).collect();
    w.c_ns = subsystems.len() as f64;
    w.c_nd = dirs.len() as f64;
    w.c_nf = per_file.len() as f64;
    w.c_ent = entropy(&per_file.values().copied().collect::<Vec<_>>());
    let comments: Vec<_> = m.pr.comments.iter().filter(|c| c.created_at < t).collect();
    w.prcom = comments.len() as f64;
    w.prcom_r = comments.iter().map(|c| c.reaction_count).sum::<u64>() as f64;
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::{
        Comment, InnerCommit, InnerFile, MatchKind, PullRequestRecord, ReviewEvent,
    };

    fn inner(hash: &str, t: i64, files: &[(&str, u64, u64)]) -> InnerCommit {
        InnerCommit {
            hash: hash.into(),
            message: hash.into(),
            author_time: t,
            lines_added: files.iter().map(|f| f.1).sum(),
            lines_deleted: files.iter().map(|f| f.2).sum(),
            files: files
                .iter()
                .map(|(p, a, d)| InnerFile {
                    path: (*p).into(),
                    lines_added: *a,
                    lines_deleted: *d,
                })
                .collect(),
        }
    }

    fn review_event(t: i64, who: &str, comments: u64, state: ReviewState) -> ReviewEvent {
        ReviewEvent {
            submitted_at: t,
            reviewer_id: who.into(),
            comment_count: comments,
            state,
        }
    }

    fn sample_pr() -> PullRequestRecord {
        PullRequestRecord {
            number: 9,
            created_at: 10_000,
            merged_at: Some(100_000),
            merge_commit_hash: None,
            review_requested_at: Some(20_000),
            inner_commits: vec![
                inner("i1", 12_000, &[("src/a.mini", 50, 10)]),
                inner("i2", 30_000, &[("src/a.mini", 10, 10), ("lib/b.mini", 10, 0)]),
                inner("i3", 40_000, &[("src/c/d.mini", 15, 5)]),
            ],
            comments: vec![
                Comment {
                    created_at: 11_000,
                    author_id: "x".into(),
                    reaction_count: 3,
                },
                Comment {
                    created_at: 40_001,
                    author_id: "y".into(),
                    reaction_count: 1,
                },
            ],
            reviews: vec![
                review_event(25_000, "r1", 2, ReviewState::Commented),
                review_event(27_200, "r1", 1, ReviewState::Approved),
                review_event(45_000, "r2", 5, ReviewState::Approved),
            ],
        }
    }

    fn commit_at(t: i64) -> CommitRecord {
        CommitRecord {
            hash: "h".into(),
            parent_hashes: vec![],
            author_id: "a".into(),
            author_time: t,
            message: String::new(),
            changes: vec![],
            is_release: false,
        }
    }

    fn matched(pr: &PullRequestRecord, position: usize) -> PrMatch<'_> {
        PrMatch {
            pr,
            inner: &pr.inner_commits[position],
            position,
            kind: MatchKind::Hash,
        }
    }

    #[test]
    fn no_pr_means_zero_review() {
        assert_eq!(review(None), Review::default());
    }

    #[test]
    fn review_counts_before_change() {
        let pr = sample_pr();
        let r = review(Some(&matched(&pr, 2)));
        // two reviews by r1 before t = 40000, three comments
        assert_eq!((r.iter, r.nrev, r.ncom), (2.0, 1.0, 3.0));
        // request at 20000, approval at 27200
        assert_eq!(r.agerev, 2.0);
    }

    #[test]
    fn agerev_falls_back_to_merge_then_zero() {
        let mut pr = sample_pr();
        pr.reviews.clear();
        assert_eq!(review(Some(&matched(&pr, 2))).agerev, 0.0);
        pr.merged_at = Some(35_000);
        assert_eq!(review(Some(&matched(&pr, 2))).agerev, 15_000.0 / 3600.0);
    }

    #[test]
    fn workflow_third_inner_commit() {
        let pr = sample_pr();
        let idx = HistoryIndex::default();
        let w = workflow(&commit_at(40_000), Some(&matched(&pr, 2)), &idx);
        assert_eq!(w.nth, 3.0);
        assert_eq!(w.dur, 30_000.0 / 3600.0);
        assert_eq!((w.c_la, w.c_ld), (85.0, 25.0));
        // current 20 of cumulative 110
        assert_eq!(w.share, 20.0 / 110.0);
        assert_eq!((w.c_ns, w.c_nd, w.c_nf), (2.0, 3.0, 3.0));
        // per-file cumulative: src/a 80, lib/b 10, src/c/d 20
        let expected = entropy(&[10, 20, 80]);
        assert_eq!(w.c_ent, expected);
        // the comment 1 s after the change is excluded
        assert_eq!((w.prcom, w.prcom_r), (1.0, 3.0));
    }

    #[test]
    fn share_ratio_on_first_commit() {
        let pr = sample_pr();
        let w = workflow(&commit_at(12_000), Some(&matched(&pr, 0)), &HistoryIndex::default());
        assert_eq!((w.c_la, w.share), (50.0, 1.0));
        let pr2 = PullRequestRecord {
            inner_commits: vec![
                inner("a", 1, &[("x", 60, 20)]),
                inner("b", 2, &[("x", 15, 5)]),
            ],
            ..sample_pr()
        };
        let w = workflow(&commit_at(2), Some(&matched(&pr2, 1)), &HistoryIndex::default());
        assert_eq!(w.share, 0.2);
    }

    #[test]
    fn release_and_developer_continuity() {
        let mut idx = HistoryIndex::default();
        let mk = |hash: &str, who: &str, t: i64, rel: bool| CommitRecord {
            hash: hash.into(),
            author_id: who.into(),
            is_release: rel,
            ..commit_at(t)
        };
        let c0 = mk("c0", "a", 0, false);
        let w = workflow(&c0, None, &idx);
        assert_eq!((w.rel_nth, w.dev_nth, w.dev_dur), (0.0, 0.0, 0.0));
        idx.record(&c0);
        let c1 = mk("c1", "b", 3600, true);
        idx.record(&c1);
        let c2 = mk("c2", "b", 7200, false);
        idx.record(&c2);
        let c3 = mk("c3", "a", 4 * 3600, false);
        let w = workflow(&c3, None, &idx);
        assert_eq!((w.rel_nth, w.rel_dur), (2.0, 3.0));
        assert_eq!((w.dev_nth, w.dev_dur), (3.0, 4.0));
    }
}
