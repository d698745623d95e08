use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PullRequestRecord;
use crate::{Error, Result};

const MANIFEST: &str = "index.json";

fn record_file(number: u64) -> String {
    format!("pr-{number}.json")
}

fn is_record_file(name: &str) -> bool {
    name.strip_prefix("pr-")
        .and_then(|s| s.strip_suffix(".json"))
        .is_some_and(|n| n.parse::<u64>().is_ok())
}

/// Writes through a temporary file and a rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_record(dir: &Path, pr: &PullRequestRecord) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(record_file(pr.number));
    let mut text = serde_json::to_string_pretty(pr)?;
    text.push('\n');
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

pub fn read_record(path: &Path) -> Result<PullRequestRecord> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pr: PullRequestRecord = serde_json::from_str(&text).map_err(|e| {
        let msg = e.to_string();
        let field = msg
            .split('`')
            .nth(1)
            .unwrap_or("<document>")
            .to_owned();
        Error::Schema {
            path: path.to_path_buf(),
            field,
            reason: msg,
        }
    })?;
    pr.validate(path)?;
    pr.comments.sort_by_key(|c| c.created_at);
    pr.reviews.sort_by_key(|r| r.submitted_at);
    Ok(pr)
}

/// Loads every `pr-<n>.json` in `dir`, ordered by PR number.
pub fn load_fixtures(dir: &Path) -> Result<Vec<PullRequestRecord>> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if entry.file_name().to_str().is_some_and(is_record_file) {
            paths.push(entry.path());
        }
    }
    let mut prs = paths
        .iter()
        .map(|p| read_record(p))
        .collect::<Result<Vec<_>>>()?;
    prs.sort_by_key(|p| p.number);
    Ok(prs)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct Manifest {
    repo: String,
    complete: bool,
    /// PR number to the listing's `updated_at` when the record was cached.
    entries: BTreeMap<u64, String>,
}

/// Per-repository PR cache under `<root>/<owner>/<name>/`.
#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
    repo: String,
    manifest: Manifest,
}

impl Cache {
    pub fn open(root: &Path, repo_id: &str) -> Result<Self> {
        let dir = root.join(repo_id);
        let manifest_path = dir.join(MANIFEST);
        let manifest = if manifest_path.exists() {
            let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
            serde_json::from_str::<Manifest>(&text)
                .ok()
                .filter(|m| m.repo == repo_id)
                .unwrap_or_default()
        } else {
            Manifest::default()
        };
        Ok(Self {
            dir,
            repo: repo_id.to_owned(),
            manifest,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn is_complete(&self) -> bool {
        self.manifest.complete
    }

    pub fn load_all(&self) -> Result<Vec<PullRequestRecord>> {
        if !self.dir.exists() {
            return Ok(Vec::new());
        }
        load_fixtures(&self.dir)
    }

    /// Cached record whose listing stamp still matches.
    pub fn fresh(&self, number: u64, updated_at: &str) -> Option<PullRequestRecord> {
        if self.manifest.entries.get(&number).map(String::as_str) != Some(updated_at) {
            return None;
        }
        read_record(&self.dir.join(record_file(number))).ok()
    }

    pub fn store(&mut self, pr: &PullRequestRecord, updated_at: &str) -> Result<()> {
        write_record(&self.dir, pr)?;
        self.manifest.entries.insert(pr.number, updated_at.to_owned());
        self.save_manifest()
    }

    pub fn mark_complete(&mut self, numbers: &[u64]) -> Result<()> {
        self.manifest.entries.retain(|n, _| numbers.contains(n));
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        for entry in fs::read_dir(&self.dir).map_err(|e| Error::io(&self.dir, e))? {
            let entry = entry.map_err(|e| Error::io(&self.dir, e))?;
            let name = entry.file_name();
            let Some(name) = name.to_str() else { continue };
            if is_record_file(name) {
                let n: u64 = name[3..name.len() - 5].parse().unwrap_or(0);
                if !numbers.contains(&n) {
                    let _ = fs::remove_file(entry.path());
                }
            }
        }
        self.manifest.complete = true;
        self.save_manifest()
    }

    fn save_manifest(&mut self) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        self.manifest.repo = self.repo.clone();
        let text = serde_json::to_string_pretty(&self.manifest)?;
        write_atomic(&self.dir.join(MANIFEST), text.as_bytes())
    }
}
