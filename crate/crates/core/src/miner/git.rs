use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use super::diff::{count_lines, is_binary, line_stats};
use super::{FileChange, MinerConfig, MiningWarning};
use crate::{Error, Result};

const EMPTY_TREE: &str = "4b825dc642cb6eb9a060e54bf8d69288fbee4904";

/// Read-only handle on a local git repository.
pub struct Repository {
    path: PathBuf,
    blobs: Mutex<Option<BlobReader>>,
}

pub(crate) struct CommitMeta {
    pub hash: String,
    pub parents: Vec<String>,
    pub author: String,
    pub author_time: i64,
    pub message: String,
}

struct RawChange {
    status: char,
    old_mode: String,
    new_mode: String,
    old_blob: String,
    new_blob: String,
    path: String,
}

impl Repository {
    pub fn open(path: &Path) -> Result<Self> {
        let repo = Self {
            path: path.to_path_buf(),
            blobs: Mutex::new(None),
        };
        repo.git(&["rev-parse", "--git-dir"]).map_err(|e| Error::Repository {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Ok(repo)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn command(&self) -> Command {
        let mut cmd = Command::new("git");
        cmd.arg("-C")
            .arg(&self.path)
            .args(["-c", "core.quotepath=off"]);
        cmd
    }

    fn git_bytes(&self, args: &[&str]) -> Result<Vec<u8>> {
        let output = self.command().args(args).output().map_err(|e| Error::Git {
            command: args.join(" "),
            stderr: e.to_string(),
        })?;
        if !output.status.success() {
            return Err(Error::Git {
                command: args.join(" "),
                stderr: String::from_utf8_lossy(&output.stderr).trim().to_owned(),
            });
        }
        Ok(output.stdout)
    }

    fn git(&self, args: &[&str]) -> Result<String> {
        Ok(String::from_utf8_lossy(&self.git_bytes(args)?).into_owned())
    }

    fn has_head(&self) -> bool {
        self.git(&["rev-parse", "--verify", "--quiet", "HEAD^{commit}"])
            .is_ok()
    }

    /// First-parent chain of `HEAD`, newest first.
    pub(crate) fn first_parent_log(&self) -> Result<Vec<CommitMeta>> {
        if !self.has_head() {
            return Ok(Vec::new());
        }
        let raw = self.git_bytes(&[
            "log",
            "--first-parent",
            "--format=%H%x00%P%x00%ae%x00%at%x00%B%x00",
            "HEAD",
        ])?;
        let text = String::from_utf8_lossy(&raw);
        let fields: Vec<&str> = text.split('\0').collect();
        let mut out = Vec::new();
        for rec in fields.chunks(5) {
            if rec.len() < 5 {
                break;
            }
            let hash = rec[0].trim().to_owned();
            let author_time = rec[3].trim().parse::<i64>().map_err(|_| Error::Git {
                command: "log".into(),
                stderr: format!("bad author time for {hash}"),
            })?;
            out.push(CommitMeta {
                parents: rec[1].split_whitespace().map(str::to_owned).collect(),
                author: rec[2].trim().to_lowercase(),
                author_time,
                message: rec[4].trim_end_matches('\n').to_owned(),
                hash,
            });
        }
        Ok(out)
    }

    /// Per-file line statistics of `commit` against `parent` (the empty tree
    /// for root commits).
    pub fn diff_commit(
        &self,
        commit: &str,
        parent: Option<&str>,
        config: &MinerConfig,
    ) -> Result<Vec<FileChange>> {
        let base = parent.unwrap_or(EMPTY_TREE);
        let rename_flag = if config.detect_renames {
            "--find-renames=50%"
        } else {
            "--no-renames"
        };
        let raw = self.git_bytes(&["diff-tree", "-r", "-z", "--raw", rename_flag, base, commit])?;
        let mut changes = Vec::new();
        for rc in parse_raw_diff(&raw)? {
            // submodules are not traversed
            if rc.old_mode == "160000" || rc.new_mode == "160000" {
                continue;
            }
            let before = if rc.status == 'A' {
                None
            } else {
                Some(self.read_blob(&rc.old_blob)?)
            };
            let after = if rc.status == 'D' {
                None
            } else {
                Some(self.read_blob(&rc.new_blob)?)
            };
            changes.push(build_change(rc.path, before, after, config));
        }
        changes.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(changes)
    }

    fn read_blob(&self, sha: &str) -> Result<Vec<u8>> {
        let mut guard = self.blobs.lock().expect("blob reader poisoned");
        if guard.is_none() {
            *guard = Some(BlobReader::spawn(self.command())?);
        }
        guard.as_mut().unwrap().read(sha)
    }

    /// Commits pointed to by tags; dangling or non-commit tags produce
    /// warnings.
    pub fn release_commits(&self) -> Result<(BTreeSet<String>, Vec<MiningWarning>)> {
        let refs = self.git(&["for-each-ref", "--format=%(refname)", "refs/tags"])?;
        let mut set = BTreeSet::new();
        let mut warnings = Vec::new();
        for name in refs.lines().filter(|l| !l.is_empty()) {
            let spec = format!("{name}^{{commit}}");
            match self.git(&["rev-parse", "--verify", "--quiet", &spec]) {
                Ok(hash) => {
                    set.insert(hash.trim().to_owned());
                }
                Err(_) => {
                    log::warn!("ignoring tag {name}: does not resolve to a commit");
                    warnings.push(MiningWarning {
                        commit: None,
                        message: format!("dangling tag {name}"),
                    });
                }
            }
        }
        Ok((set, warnings))
    }
}

fn build_change(
    path: String,
    before: Option<Vec<u8>>,
    after: Option<Vec<u8>>,
    config: &MinerConfig,
) -> FileChange {
    let language = config.language_for(&path);
    let binary = before.as_deref().is_some_and(is_binary) || after.as_deref().is_some_and(is_binary);
    if binary {
        return FileChange {
            path,
            lines_added: 0,
            lines_deleted: 0,
            size_before: 0,
            before_text: None,
            after_text: None,
            language,
        };
    }
    let before_text = before.map(|b| String::from_utf8_lossy(&b).into_owned());
    let after_text = after.map(|b| String::from_utf8_lossy(&b).into_owned());
    let old = before_text.as_deref().unwrap_or("");
    let new = after_text.as_deref().unwrap_or("");
    let (lines_added, lines_deleted) = line_stats(old, new);
    let size_before = count_lines(old);
    let too_large = old.len() > config.snapshot_cap || new.len() > config.snapshot_cap;
    FileChange {
        path,
        lines_added,
        lines_deleted,
        size_before,
        before_text: if too_large { None } else { before_text },
        after_text: if too_large { None } else { after_text },
        language,
    }
}

fn parse_raw_diff(raw: &[u8]) -> Result<Vec<RawChange>> {
    let text = String::from_utf8_lossy(raw);
    let mut parts = text.split('\0').filter(|p| !p.is_empty());
    let mut out = Vec::new();
    while let Some(header) = parts.next() {
        let header = header.trim_start_matches('\n');
        let bad = || Error::Git {
            command: "diff-tree".into(),
            stderr: format!("unexpected raw line `{header}`"),
        };
        let fields: Vec<&str> = header.trim_start_matches(':').split(' ').collect();
        if fields.len() != 5 {
            return Err(bad());
        }
        let status = fields[4].chars().next().ok_or_else(bad)?;
        let mut path = parts.next().ok_or_else(bad)?.to_owned();
        if matches!(status, 'R' | 'C') {
            path = parts.next().ok_or_else(bad)?.to_owned();
        }
        out.push(RawChange {
            status,
            old_mode: fields[0].to_owned(),
            new_mode: fields[1].to_owned(),
            old_blob: fields[2].to_owned(),
            new_blob: fields[3].to_owned(),
            path,
        });
    }
    Ok(out)
}

/// Long-lived `git cat-file --batch` process.
struct BlobReader {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl BlobReader {
    fn spawn(mut cmd: Command) -> Result<Self> {
        let mut child = cmd
            .args(["cat-file", "--batch"])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| Error::Git {
                command: "cat-file --batch".into(),
                stderr: e.to_string(),
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self {
            child,
            stdin,
            stdout,
        })
    }

    fn read(&mut self, sha: &str) -> Result<Vec<u8>> {
        let io_err = |e: std::io::Error| Error::Git {
            command: "cat-file --batch".into(),
            stderr: e.to_string(),
        };
        writeln!(self.stdin, "{sha}").map_err(io_err)?;
        self.stdin.flush().map_err(io_err)?;
        let mut header = String::new();
        self.stdout.read_line(&mut header).map_err(io_err)?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 || fields[1] != "blob" {
            return Err(Error::Git {
                command: "cat-file --batch".into(),
                stderr: format!("object {sha} unreadable: {}", header.trim()),
            });
        }
        let size: usize = fields[2].parse().map_err(|_| Error::Git {
            command: "cat-file --batch".into(),
            stderr: format!("bad size in `{}`", header.trim()),
        })?;
        let mut buf = vec![0u8; size + 1];
        self.stdout.read_exact(&mut buf).map_err(io_err)?;
        buf.pop();
        Ok(buf)
    }
}

impl Drop for BlobReader {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
