//! The bundled demo project: a small MiniLang repository with two pull
//! requests and a label file, built deterministically with the git CLI.

mod minigen;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use crate::forge::{write_record, Comment, InnerCommit, InnerFile, PullRequestRecord, ReviewEvent, ReviewState};
use crate::miner::line_stats;
use crate::{Error, Result, DAY, HOUR};

pub use minigen::{random_pair, Program};

/// Author time of the first commit (2021-01-04 10:00 UTC).
pub const EPOCH: i64 = 1_609_754_400;

const D: i64 = DAY as i64;
const H: i64 = HOUR as i64;

#[derive(Debug, Clone)]
pub struct FixturePaths {
    pub repo: PathBuf,
    pub prs: PathBuf,
    pub labels: PathBuf,
}

const MATH_V1: &str = "fn add(a, b) {
  return a + b;
}
fn sub(a, b) {
  return a - b;
}
";

const MATH_V2: &str = "fn add(a, b) {
  // plain sum
  return a + b;
}
fn sub(a, b) {
  return a - b;
}
";

const MATH_V3: &str = "fn add(a, b) {
  // plain sum
  return a + b;
}
fn sub(a, b) {
  return a - b - 1;
}
fn mul(a, b) {
  total = 0;
  for (i = 0; i < b; i = i + 1) {
    total = total + a;
  }
  return total;
}
";

const MATH_V4: &str = "fn add(a, b) {
  // plain sum
  return a + b;
}
fn sub(a, b) {
  return a - b - 1;
}
fn mul(a, b) {
  log(shout(\"mul\"));
  total = 0;
  for (i = 0; i < b; i = i + 1) {
    total = total + a;
  }
  return total;
}
";

const MATH_V5: &str = "fn add(a, b) {
    // plain sum
    return a + b;
}

fn sub(a, b) {
    return a - b - 1;
}

fn mul(a, b) {
    log(shout(\"mul\"));
    total = 0;
    for (i = 0; i < b; i = i + 1) {
        total = total + a;
    }
    return total;
}
";

const STRINGS_V1: &str = "fn greet(name) {
  return \"hello \" + name;
}
";

const STRINGS_V2: &str = "fn greet(name) {
  return \"hi \" + name;
}
";

const STRINGS_V3: &str = "fn greet(name) {
  return \"hi \" + name;
}
fn shout(s) {
  return upper(s) + \"!\";
}
";

const STRINGS_V4: &str = "/* greet was folded into shout */
fn shout(s) {
  return upper(s) + \"!\";
}
";

const PARSE_V1: &str = "fn parse(text) {
  i = 0;
  while (i < len(text)) {
    if (at(text, i) == \";\") {
      break;
    }
    i = i + 1;
  }
  return i;
}
";

const PARSE_V2: &str = "fn parse(text) {
  // empty input has nothing to scan
  if (len(text) == 0) {
    return -1;
  }
  i = 0;
  while (i < len(text)) {
    if (at(text, i) == \",\") {
      break;
    }
    i = i + 1;
  }
  return i;
}
";

const DRAFT: &str = "fn draft( {
  return 1;
}
";

const README: &str = "# demo\n\nA tiny MiniLang project.\n";
const NOTES: &str = "Helpers live in src/util.\n";
const LOGO: &[u8] = &[0x89, b'P', b'N', b'G', 0, 0, 0, 13, 0, 1, 2, 3, 0, 255];

const MATH: &str = "src/core/math.mini";
const STRINGS: &str = "src/util/strings.mini";
const PARSE: &str = "src/core/parse.mini";

struct Git<'a> {
    dir: &'a Path,
}

impl Git<'_> {
    fn run(&self, args: &[&str], author: &str, time: i64) -> Result<String> {
        let date = format!("@{time} +0000");
        let name = author.split('@').next().unwrap_or(author);
        let out = Command::new("git")
            .arg("-C")
            .arg(self.dir)
            .args(["-c", "commit.gpgsign=false", "-c", "tag.gpgsign=false", "-c", "core.autocrlf=false"])
            .args(args)
            .env("GIT_CONFIG_NOSYSTEM", "1")
            .env("GIT_CONFIG_GLOBAL", "/dev/null")
            .env("GIT_AUTHOR_NAME", name)
            .env("GIT_AUTHOR_EMAIL", author)
            .env("GIT_AUTHOR_DATE", &date)
            .env("GIT_COMMITTER_NAME", name)
            .env("GIT_COMMITTER_EMAIL", author)
            .env("GIT_COMMITTER_DATE", &date)
            .output()
            .map_err(|e| Error::io("git", e))?;
        if !out.status.success() {
            return Err(Error::Git {
                command: args.join(" "),
                stderr: String::from_utf8_lossy(&out.stderr).trim().to_owned(),
            });
        }
        Ok(String::from_utf8_lossy(&out.stdout).trim().to_owned())
    }

    fn write(&self, path: &str, content: &[u8]) -> Result<()> {
        let full = self.dir.join(path);
        if let Some(parent) = full.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&full, content).map_err(|e| Error::io(&full, e))
    }

    fn remove(&self, path: &str) -> Result<()> {
        let full = self.dir.join(path);
        std::fs::remove_file(&full).map_err(|e| Error::io(&full, e))
    }

    /// Writes files and commits them, returning the new hash.
    fn commit(&self, author: &str, time: i64, message: &str, files: &[(&str, &[u8])]) -> Result<String> {
        for (path, content) in files {
            self.write(path, content)?;
        }
        self.run(&["add", "-A"], author, time)?;
        self.run(&["commit", "-q", "-m", message], author, time)?;
        self.run(&["rev-parse", "HEAD"], author, time)
    }
}

fn inner_file(path: &str, before: &str, after: &str) -> InnerFile {
    let (lines_added, lines_deleted) = line_stats(before, after);
    InnerFile {
        path: path.into(),
        lines_added,
        lines_deleted,
    }
}

fn inner(hash: &str, message: &str, author_time: i64, files: Vec<InnerFile>) -> InnerCommit {
    InnerCommit {
        hash: hash.into(),
        message: message.into(),
        author_time,
        lines_added: files.iter().map(|f| f.lines_added).sum(),
        lines_deleted: files.iter().map(|f| f.lines_deleted).sum(),
        files,
    }
}

fn review(submitted_at: i64, reviewer: &str, comment_count: u64, state: ReviewState) -> ReviewEvent {
    ReviewEvent {
        submitted_at,
        reviewer_id: reviewer.into(),
        comment_count,
        state,
    }
}

fn comment(created_at: i64, author: &str, reaction_count: u64) -> Comment {
    Comment {
        created_at,
        author_id: author.into(),
        reaction_count,
    }
}

/// Builds `out/repo`, `out/prs/pr-<n>.json` and `out/labels.csv`.
///
/// The first-parent history has 12 commits over about seven months: one
/// `--no-ff` merge, one lightweight tag, a binary file, a whitespace-only
/// edit and a file that does not parse. Pull request 1 was rebase-merged
/// (its inner commits are on the main line); pull request 2 was squashed,
/// so only its last inner commit's message survives.
pub fn generate(out: &Path) -> Result<FixturePaths> {
    let repo = out.join("repo");
    if repo.exists() && std::fs::read_dir(&repo).map_err(|e| Error::io(&repo, e))?.next().is_some() {
        return Err(Error::InvalidData(format!("{} already exists and is not empty", repo.display())));
    }
    std::fs::create_dir_all(&repo).map_err(|e| Error::io(&repo, e))?;
    let git = Git { dir: &repo };
    let (alice, bob, carol) = ("alice@example.com", "bob@example.com", "carol@example.com");
    let t = |days: i64, hours: i64| EPOCH + days * D + hours * H;

    git.run(&["init", "-q", "-b", "main"], alice, t(0, 0))?;
    let mut hashes = BTreeMap::new();
    hashes.insert("c1", git.commit(alice, t(0, 0), "Add math module", &[(MATH, MATH_V1.as_bytes()), ("README.md", README.as_bytes())])?);
    hashes.insert("c2", git.commit(bob, t(19, 3), "Add string helpers", &[(STRINGS, STRINGS_V1.as_bytes()), (MATH, MATH_V2.as_bytes())])?);
    hashes.insert("c3", git.commit(alice, t(38, 0), "Tune subtraction\n\nAlso adds mul.", &[(MATH, MATH_V3.as_bytes())])?);
    git.run(&["tag", "v0.1"], alice, t(38, 1))?;
    hashes.insert("c4", git.commit(carol, t(57, 5), "Document helpers", &[("docs/notes.txt", NOTES.as_bytes()), (STRINGS, STRINGS_V2.as_bytes())])?);
    hashes.insert("c5", git.commit(bob, t(76, 2), "Add shout helper", &[(STRINGS, STRINGS_V3.as_bytes())])?);
    hashes.insert("c6", git.commit(bob, t(95, 4), "Use shout in math", &[(MATH, MATH_V4.as_bytes())])?);

    git.run(&["checkout", "-q", "-b", "cleanup"], carol, t(100, 0))?;
    hashes.insert("b1", git.commit(carol, t(100, 0), "Remove old helper", &[(STRINGS, STRINGS_V4.as_bytes())])?);
    git.run(&["checkout", "-q", "main"], carol, t(114, 0))?;
    git.run(&["merge", "-q", "--no-ff", "-m", "Merge branch 'cleanup'", "cleanup"], carol, t(114, 0))?;
    hashes.insert("m8", git.run(&["rev-parse", "HEAD"], carol, t(114, 0))?);
    git.run(&["branch", "-q", "-D", "cleanup"], carol, t(114, 0))?;

    hashes.insert("c9", git.commit(alice, t(133, 6), "Add parser loop", &[(PARSE, PARSE_V1.as_bytes())])?);
    hashes.insert("c10", git.commit(bob, t(152, 0), "Add logo", &[("assets/logo.bin", LOGO)])?);
    hashes.insert("c11", git.commit(alice, t(171, 2), "Reformat math", &[(MATH, MATH_V5.as_bytes())])?);
    git.remove("docs/notes.txt")?;
    hashes.insert("c12", git.commit(carol, t(190, 0), "Handle empty input", &[(PARSE, PARSE_V2.as_bytes())])?);
    hashes.insert("c13", git.commit(bob, t(209, 1), "Add draft module", &[("src/draft.mini", DRAFT.as_bytes())])?);

    let prs = out.join("prs");
    std::fs::create_dir_all(&prs).map_err(|e| Error::io(&prs, e))?;

    let c5 = t(76, 2);
    let c6 = t(95, 4);
    let pr1 = PullRequestRecord {
        number: 1,
        created_at: c5 - D,
        merged_at: Some(c6 + 6 * H),
        merge_commit_hash: Some(hashes["c6"].clone()),
        review_requested_at: Some(c5 - D + 2 * H),
        inner_commits: vec![
            inner(&hashes["c5"], "Add shout helper", c5, vec![inner_file(STRINGS, STRINGS_V2, STRINGS_V3)]),
            inner(&hashes["c6"], "Use shout in math", c6, vec![inner_file(MATH, MATH_V3, MATH_V4)]),
        ],
        comments: vec![comment(c5 + 2 * H, alice, 2), comment(c6 + H, carol, 1)],
        reviews: vec![
            review(c5 + 3 * H, alice, 2, ReviewState::Commented),
            review(c5 + 5 * H, carol, 1, ReviewState::ChangesRequested),
            review(c6 - 2 * H, carol, 0, ReviewState::Approved),
        ],
    };

    let c9 = t(133, 6);
    let parse_draft = "fn parse(text) {\n  i = 0;\n  return i;\n}\n";
    let pr2 = PullRequestRecord {
        number: 2,
        created_at: c9 - 3 * D,
        merged_at: Some(c9 + H),
        merge_commit_hash: Some("5e1f0c2b9d8a7e6f5a4b3c2d1e0f9a8b7c6d5e4f".into()),
        review_requested_at: None,
        inner_commits: vec![
            inner(
                "0f2d6c1e3a5b7d9f1e3c5a7b9d1f3e5c7a9b1d3f",
                "Start parser loop",
                c9 - 2 * D,
                vec![inner_file(PARSE, "", parse_draft)],
            ),
            inner(
                "7a9c1e3f5b7d9a1c3e5f7b9d1a3c5e7f9b1d3a5c",
                "Add parser loop",
                c9 - D,
                vec![inner_file(PARSE, parse_draft, PARSE_V1)],
            ),
        ],
        comments: vec![comment(c9 - 36 * H, bob, 3)],
        reviews: vec![
            review(c9 - 43 * H, carol, 1, ReviewState::Commented),
            review(c9 - 12 * H, carol, 0, ReviewState::Approved),
        ],
    };
    for pr in [&pr1, &pr2] {
        write_record(&prs, pr)?;
    }

    let labels = out.join("labels.csv");
    let mut text = String::from("# coverage=complete\ncommit_hash,label\n");
    for key in ["c2", "c3", "c6", "c9", "c12"] {
        text.push_str(&format!("{},1\n", hashes[key]));
    }
    std::fs::write(&labels, text).map_err(|e| Error::io(&labels, e))?;

    Ok(FixturePaths { repo, prs, labels })
}
