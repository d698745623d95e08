//! Pull-request metadata: records, fixture/cache files, REST ingestion and
//! the mapping from repository commits to inner pull-request commits.

mod cache;
mod client;
mod mapping;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use cache::{load_fixtures, read_record, write_record, Cache};
pub use client::{
    fetch_pull_requests, FetchReport, ForgeClient, HttpResponse, Transport, UreqTransport,
};
pub use mapping::{map_commit_to_pr, normalize_message, MatchKind, PrIndex, PrMatch, Resolution};

/// Environment variable holding the forge API token.
pub const TOKEN_ENV: &str = "FORGE_TOKEN";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PullRequestRecord {
    pub number: u64,
    pub created_at: i64,
    pub merged_at: Option<i64>,
    pub merge_commit_hash: Option<String>,
    pub review_requested_at: Option<i64>,
    pub inner_commits: Vec<InnerCommit>,
    pub comments: Vec<Comment>,
    pub reviews: Vec<ReviewEvent>,
}

impl PullRequestRecord {
    /// Review request time, falling back to creation time.
    pub fn review_requested(&self) -> i64 {
        self.review_requested_at.unwrap_or(self.created_at)
    }

    /// Checks record invariants; `source` names the file for error messages.
    pub fn validate(&self, source: &Path) -> Result<()> {
        if let Some(merged) = self.merged_at {
            if merged < self.created_at {
                return Err(Error::Schema {
                    path: source.to_path_buf(),
                    field: "merged_at".into(),
                    reason: format!(
                        "merged_at ({merged}) precedes created_at ({})",
                        self.created_at
                    ),
                });
            }
        }
        if self
            .inner_commits
            .windows(2)
            .any(|w| w[0].author_time > w[1].author_time)
        {
            return Err(Error::Schema {
                path: source.to_path_buf(),
                field: "inner_commits".into(),
                reason: "inner commits not ordered by author_time".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InnerFile {
    pub path: String,
    #[serde(default)]
    pub lines_added: u64,
    #[serde(default)]
    pub lines_deleted: u64,
}

/// A commit as it existed inside a pull request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InnerCommit {
    pub hash: String,
    pub message: String,
    pub author_time: i64,
    pub lines_added: u64,
    pub lines_deleted: u64,
    pub files: Vec<InnerFile>,
}

impl InnerCommit {
    pub fn churn(&self) -> u64 {
        self.lines_added + self.lines_deleted
    }

    pub fn subsystems(&self) -> BTreeSet<String> {
        self.files.iter().map(|f| subsystem_of(&f.path)).collect()
    }

    pub fn directories(&self) -> BTreeSet<String> {
        self.files.iter().map(|f| directory_of(&f.path)).collect()
    }
}

/// Root directory segment of a path; files at the repository root belong to
/// subsystem `/`.
pub fn subsystem_of(path: &str) -> String {
    match path.split_once('/') {
        Some((root, _)) => root.to_owned(),
        None => "/".to_owned(),
    }
}

/// Full parent path; `/` for files at the root.
pub fn directory_of(path: &str) -> String {
    match path.rsplit_once('/') {
        Some((dir, _)) => dir.to_owned(),
        None => "/".to_owned(),
    }
}

/// A pull-request discussion comment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub created_at: i64,
    pub author_id: String,
    pub reaction_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewState {
    Approved,
    ChangesRequested,
    Commented,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewEvent {
    pub submitted_at: i64,
    pub reviewer_id: String,
    pub comment_count: u64,
    pub state: ReviewState,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_segments() {
        assert_eq!(subsystem_of("src/a/b.mini"), "src");
        assert_eq!(subsystem_of("README"), "/");
        assert_eq!(directory_of("src/a/b.mini"), "src/a");
        assert_eq!(directory_of("README"), "/");
    }

    #[test]
    fn merged_before_created_is_rejected() {
        let pr = PullRequestRecord {
            number: 1,
            created_at: 100,
            merged_at: Some(50),
            merge_commit_hash: None,
            review_requested_at: None,
            inner_commits: vec![],
            comments: vec![],
            reviews: vec![],
        };
        let err = pr.validate(Path::new("pr-1.json")).unwrap_err().to_string();
        assert!(err.contains("merged_at") && err.contains("created_at"), "{err}");
        assert!(err.contains("pr-1.json"));
    }
}
