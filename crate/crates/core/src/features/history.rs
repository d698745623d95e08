use std::collections::{BTreeSet, HashMap};

use crate::forge::subsystem_of;
use crate::miner::CommitRecord;
use crate::{DAY, YEAR};

#[derive(Debug, Clone, Default)]
struct FileHistory {
    last_change: i64,
    commits: BTreeSet<String>,
    authors: BTreeSet<String>,
}

#[derive(Debug, Clone, Default)]
struct AuthorHistory {
    times: Vec<i64>,
    subsystems: HashMap<String, u64>,
    last_position: usize,
    last_time: i64,
}

/// Causal per-file, per-author and per-subsystem history. Queries see only
/// commits recorded before.
#[derive(Debug, Clone, Default)]
pub struct HistoryIndex {
    files: HashMap<String, FileHistory>,
    authors: HashMap<String, AuthorHistory>,
    subsystems: HashMap<String, u64>,
    /// (stream position, time) of the latest release commit.
    last_release: Option<(usize, i64)>,
    /// Number of commits recorded so far; the position of the next commit.
    position: usize,
}

impl HistoryIndex {
    pub fn position(&self) -> usize {
        self.position
    }

    pub fn last_release(&self) -> Option<(usize, i64)> {
        self.last_release
    }

    /// (stream position, time) of the author's previous commit.
    pub fn author_last(&self, author: &str) -> Option<(usize, i64)> {
        self.authors
            .get(author)
            .filter(|a| !a.times.is_empty())
            .map(|a| (a.last_position, a.last_time))
    }

    pub fn record(&mut self, commit: &CommitRecord) {
        for f in &commit.changes {
            let h = self.files.entry(f.path.clone()).or_default();
            h.last_change = commit.author_time;
            h.commits.insert(commit.hash.clone());
            h.authors.insert(commit.author_id.clone());
        }
        let subsystems = commit_subsystems(commit);
        let author = self.authors.entry(commit.author_id.clone()).or_default();
        author.times.push(commit.author_time);
        author.last_position = self.position;
        author.last_time = commit.author_time;
        for s in &subsystems {
            *author.subsystems.entry(s.clone()).or_default() += 1;
            *self.subsystems.entry(s.clone()).or_default() += 1;
        }
        if commit.is_release {
            self.last_release = Some((self.position, commit.author_time));
        }
        self.position += 1;
    }
}

fn commit_subsystems(commit: &CommitRecord) -> BTreeSet<String> {
    commit.changes.iter().map(|f| subsystem_of(&f.path)).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct History {
    pub nuc: f64,
    pub ndev: f64,
    /// Mean days since each modified file's last change.
    pub age: f64,
}

pub fn history(commit: &CommitRecord, index: &HistoryIndex) -> History {
    let mut commits = BTreeSet::new();
    let mut authors = BTreeSet::new();
    let mut age_sum = 0.0;
    for f in &commit.changes {
        if let Some(h) = index.files.get(&f.path) {
            commits.extend(h.commits.iter());
            authors.extend(h.authors.iter());
            age_sum += (commit.author_time - h.last_change).max(0) as f64 / DAY;
        }
    }
    let n = commit.changes.len();
    History {
        nuc: commits.len() as f64,
        ndev: authors.len() as f64,
        age: if n == 0 { 0.0 } else { age_sum / n as f64 },
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Experience {
    pub exp: f64,
    pub rexp: f64,
    pub sexp: f64,
    pub aware: f64,
}

pub fn experience(commit: &CommitRecord, index: &HistoryIndex) -> Experience {
    let Some(author) = index.authors.get(&commit.author_id) else {
        return Experience::default();
    };
    let rexp = author
        .times
        .iter()
        .map(|&t| {
            let years = (commit.author_time - t).max(0) as f64 / YEAR;
            1.0 / (years + 1.0)
        })
        .sum();
    let subsystems = commit_subsystems(commit);
    let sexp: u64 = subsystems
        .iter()
        .map(|s| author.subsystems.get(s).copied().unwrap_or(0))
        .sum();
    let all: u64 = subsystems
        .iter()
        .map(|s| index.subsystems.get(s).copied().unwrap_or(0))
        .sum();
    Experience {
        exp: author.times.len() as f64,
        rexp,
        sexp: sexp as f64,
        aware: if all == 0 { 0.0 } else { sexp as f64 / all as f64 },
    }
}
