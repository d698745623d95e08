//! Repository mining: ordered commit records with per-file line statistics.
//!
//! History is read through the `git` command-line tool. Line counts come from
//! our own line diff ([`line_stats`]) over the before/after blobs rather than
//! from `git diff --numstat`, so counts and snapshots always agree.

mod diff;
mod git;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use diff::{count_lines, is_binary, line_stats};
pub use git::Repository;

/// Default cap for retaining before/after snapshots of a file.
pub const DEFAULT_SNAPSHOT_CAP: usize = 1 << 20;

/// Commits changing more lines than this are outliers.
pub const OUTLIER_MAX_LINES: u64 = 10_000;
/// Commits changing more files than this are outliers.
pub const OUTLIER_MAX_FILES: usize = 100;

/// One version-control change.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub hash: String,
    pub parent_hashes: Vec<String>,
    pub author_id: String,
    pub author_time: i64,
    pub message: String,
    pub changes: Vec<FileChange>,
    pub is_release: bool,
}

impl CommitRecord {
    pub fn is_merge(&self) -> bool {
        self.parent_hashes.len() > 1
    }

    pub fn lines_added(&self) -> u64 {
        self.changes.iter().map(|c| c.lines_added).sum()
    }

    pub fn lines_deleted(&self) -> u64 {
        self.changes.iter().map(|c| c.lines_deleted).sum()
    }

    pub fn churn(&self) -> u64 {
        self.lines_added() + self.lines_deleted()
    }
}

/// Line statistics and optional source snapshots for one changed path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path: String,
    pub lines_added: u64,
    pub lines_deleted: u64,
    pub size_before: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub before_text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub after_text: Option<String>,
    pub language: String,
}

impl FileChange {
    pub fn churn(&self) -> u64 {
        self.lines_added + self.lines_deleted
    }
}

/// Inclusive author-time window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TimeRange {
    pub since: Option<i64>,
    pub until: Option<i64>,
}

impl TimeRange {
    pub fn contains(&self, t: i64) -> bool {
        self.since.is_none_or(|s| t >= s) && self.until.is_none_or(|u| t <= u)
    }
}

#[derive(Debug, Clone)]
pub struct MinerConfig {
    pub range: TimeRange,
    pub snapshot_cap: usize,
    /// Similarity-based rename detection at 50%. Off: rename = delete + add.
    pub detect_renames: bool,
    pub skip_merges: bool,
    /// File extension (without dot) to language tag.
    pub languages: BTreeMap<String, String>,
}

impl Default for MinerConfig {
    fn default() -> Self {
        let mut languages = BTreeMap::new();
        languages.insert("mini".to_owned(), crate::ast::MINILANG.to_owned());
        Self {
            range: TimeRange::default(),
            snapshot_cap: DEFAULT_SNAPSHOT_CAP,
            detect_renames: false,
            skip_merges: false,
            languages,
        }
    }
}

impl MinerConfig {
    pub fn language_for(&self, path: &str) -> String {
        Path::new(path)
            .extension()
            .and_then(|e| e.to_str())
            .and_then(|e| self.languages.get(e))
            .cloned()
            .unwrap_or_else(|| "unknown".to_owned())
    }
}

/// Non-fatal problem met while mining.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningWarning {
    pub commit: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct MiningOutput {
    pub commits: Vec<CommitRecord>,
    pub warnings: Vec<MiningWarning>,
}

/// Walks the first-parent history of `HEAD` and returns commits sorted by
/// `(author_time, hash)`, release markers applied.
pub fn walk_history(repo_path: &Path, config: &MinerConfig) -> Result<MiningOutput> {
    let repo = Repository::open(repo_path)?;
    let mut out = MiningOutput::default();
    let (releases, tag_warnings) = repo.release_commits()?;
    out.warnings.extend(tag_warnings);

    let mut seen = BTreeSet::new();
    for meta in repo.first_parent_log()? {
        if !config.range.contains(meta.author_time) {
            continue;
        }
        if config.skip_merges && meta.parents.len() > 1 {
            continue;
        }
        if !seen.insert(meta.hash.clone()) {
            continue;
        }
        match repo.diff_commit(&meta.hash, meta.parents.first().map(String::as_str), config) {
            Ok(changes) => out.commits.push(CommitRecord {
                is_release: releases.contains(&meta.hash),
                hash: meta.hash,
                parent_hashes: meta.parents,
                author_id: meta.author,
                author_time: meta.author_time,
                message: meta.message,
                changes,
            }),
            Err(e) => {
                log::warn!("skipping commit {}: {e}", meta.hash);
                out.warnings.push(MiningWarning {
                    commit: Some(meta.hash),
                    message: e.to_string(),
                });
            }
        }
    }
    out.commits
        .sort_by(|a, b| (a.author_time, &a.hash).cmp(&(b.author_time, &b.hash)));
    Ok(out)
}

/// Hashes of tagged commits, peeling annotated tag objects.
pub fn mark_releases(repo_path: &Path) -> Result<(BTreeSet<String>, Vec<MiningWarning>)> {
    Repository::open(repo_path)?.release_commits()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OutlierReport {
    pub removed: usize,
}

pub fn is_outlier(commit: &CommitRecord) -> bool {
    commit.churn() > OUTLIER_MAX_LINES || commit.changes.len() > OUTLIER_MAX_FILES
}

/// Drops commits changing more than 10000 lines or more than 100 files.
pub fn filter_outliers(commits: Vec<CommitRecord>) -> (Vec<CommitRecord>, OutlierReport) {
    let before = commits.len();
    let kept: Vec<_> = commits.into_iter().filter(|c| !is_outlier(c)).collect();
    let removed = before - kept.len();
    (kept, OutlierReport { removed })
}

/// Writes one JSON object per line.
pub fn write_jsonl<W: Write>(commits: &[CommitRecord], mut w: W) -> Result<()> {
    for c in commits {
        serde_json::to_writer(&mut w, c)?;
        w.write_all(b"\n").map_err(|e| Error::io(PathBuf::from("<jsonl>"), e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn commit(files: usize, added: u64) -> CommitRecord {
        CommitRecord {
            hash: format!("h{files}-{added}"),
            parent_hashes: vec![],
            author_id: "a".into(),
            author_time: 0,
            message: String::new(),
            changes: (0..files)
                .map(|i| FileChange {
                    path: format!("f{i}"),
                    lines_added: if i == 0 { added } else { 0 },
                    lines_deleted: 0,
                    size_before: 0,
                    before_text: None,
                    after_text: None,
                    language: "unknown".into(),
                })
                .collect(),
            is_release: false,
        }
    }

    #[test]
    fn outlier_cut_is_strict() {
        assert!(is_outlier(&commit(101, 1)));
        assert!(!is_outlier(&commit(100, 1)));
        assert!(!is_outlier(&commit(1, 10_000)));
        assert!(is_outlier(&commit(1, 10_001)));
    }

    #[test]
    fn filter_reports_removed_count_and_is_idempotent() {
        let stream = vec![
            commit(1, 3),
            commit(2, 5),
            commit(101, 1),
            commit(3, 7),
            commit(4, 9),
        ];
        let (kept, report) = filter_outliers(stream);
        assert_eq!(kept.len(), 4);
        assert_eq!(report.removed, 1);
        let (again, report) = filter_outliers(kept.clone());
        assert_eq!(again, kept);
        assert_eq!(report.removed, 0);
    }

    #[test]
    fn language_tag_by_extension() {
        let cfg = MinerConfig::default();
        assert_eq!(cfg.language_for("src/a.mini"), "minilang");
        assert_eq!(cfg.language_for("README"), "unknown");
    }
}
