use std::collections::BTreeMap;
use std::path::Path;

use super::Label;
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelFile {
    pub labels: BTreeMap<String, Label>,
    /// Set by a `# coverage=complete` line: commits absent from the file
    /// are clean rather than unknown.
    pub complete: bool,
}

fn parse_label(s: &str) -> Option<Label> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "defect-inducing" | "buggy" => Some(Label::DefectInducing),
        "0" | "false" | "clean" => Some(Label::Clean),
        _ => None,
    }
}

/// Parses `commit_hash,label` lines. A header row and `#` comment lines are
/// allowed; a repeated hash is an error.
pub fn parse_labels(text: &str, origin: &str) -> Result<LabelFile> {
    let mut file = LabelFile::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(directive) = line.strip_prefix('#') {
            let directive: String = directive.chars().filter(|c| !c.is_whitespace()).collect();
            if directive.eq_ignore_ascii_case("coverage=complete") {
                file.complete = true;
            }
            continue;
        }
        let Some((hash, label)) = line.split_once(',') else {
            return Err(Error::Schema {
                path: origin.into(),
                field: "label".into(),
                reason: format!("line {}: expected `commit_hash,label`", i + 1),
            });
        };
        let hash = hash.trim();
        let Some(label) = parse_label(label) else {
            if file.labels.is_empty() && hash.eq_ignore_ascii_case("commit_hash") {
                continue;
            }
            return Err(Error::Schema {
                path: origin.into(),
                field: "label".into(),
                reason: format!("line {}: unknown label `{}`", i + 1, label.trim()),
            });
        };
        if file.labels.insert(hash.to_owned(), label).is_some() {
            return Err(Error::DuplicateLabel { hash: hash.into() });
        }
    }
    Ok(file)
}

pub fn read_labels(path: &Path) -> Result<LabelFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text, &path.display().to_string())
}
