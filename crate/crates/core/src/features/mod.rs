//! The 51 change features: 18 state-of-the-art (SotA), 15 development
//! workflow and 18 AST-change (PATH) features.

mod csv;
mod history;
mod labels;
mod path;
mod size;
mod workflow;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ast::Registry;
use crate::forge::{map_commit_to_pr, PrIndex, Resolution};
use crate::miner::CommitRecord;
use crate::Result;

pub use csv::{format_g6, write_csv, CSV_HEADER_PREFIX};
pub use history::{experience, history, Experience, History, HistoryIndex};
pub use labels::{parse_labels, read_labels, LabelFile};
pub use path::{path_features, PathFeatures, PathStats};
pub use size::{entropy, size_diffusion, SizeDiffusion};
pub use workflow::{review, workflow, Review, Workflow};

pub const SOTA: [&str; 18] = [
    "LA", "LD", "LT", "NS", "ND", "NF", "ENT", "NUC", "NDEV", "AGE", "EXP", "REXP", "SEXP",
    "AWARE", "ITER", "NREV", "NCOM", "AGEREV",
];

pub const WORKFLOW: [&str; 15] = [
    "DUR", "NTH", "C-LA", "C-LD", "SHARE", "C-NS", "C-ND", "C-NF", "C-ENT", "REL-NTH",
    "REL-DUR", "DEV-NTH", "DEV-DUR", "PRCOM", "PRCOM-R",
];

pub const PATH: [&str; 18] = [
    "FUN", "FUNT", "FUNDIFF", "FUNA", "FUND", "FUNU", "ASTA", "ASTD", "ASTU", "SASTA", "SASTD",
    "CASTA", "CASTD", "PASTA", "PASTD", "DEPTHA", "DEPTHD", "DEPTHU",
];

pub const NUM_FEATURES: usize = 51;

/// All feature names in output order.
pub fn feature_names() -> Vec<&'static str> {
    SOTA.iter().chain(&WORKFLOW).chain(&PATH).copied().collect()
}

pub fn feature_index(name: &str) -> Option<usize> {
    SOTA.iter()
        .chain(&WORKFLOW)
        .chain(&PATH)
        .position(|n| *n == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    Sota,
    Workflow,
    Path,
    All,
}

impl FeatureSet {
    pub fn names(self) -> Vec<&'static str> {
        match self {
            FeatureSet::Sota => SOTA.to_vec(),
            FeatureSet::Workflow => WORKFLOW.to_vec(),
            FeatureSet::Path => PATH.to_vec(),
            FeatureSet::All => feature_names(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::Sota => "sota",
            FeatureSet::Workflow => "workflow",
            FeatureSet::Path => "path",
            FeatureSet::All => "all",
        }
    }
}

impl std::str::FromStr for FeatureSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "sota" => Ok(FeatureSet::Sota),
            "workflow" => Ok(FeatureSet::Workflow),
            "path" => Ok(FeatureSet::Path),
            "all" => Ok(FeatureSet::All),
            other => Err(format!("unknown feature set `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Clean,
    DefectInducing,
}

impl Label {
    pub fn is_defective(self) -> bool {
        self == Label::DefectInducing
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub commit_hash: String,
    pub timestamp: i64,
    /// Values in [`feature_names`] order.
    pub values: Vec<f64>,
    pub label: Option<Label>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.values[i])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExtractionSummary {
    pub commits: usize,
    pub rows: usize,
    pub pr_matched: usize,
    pub pr_matched_by_hash: usize,
    pub pr_matched_by_message: usize,
    pub ambiguous_messages: usize,
    pub parse_failures: usize,
    pub unlabeled_dropped: usize,
    pub labels_not_in_stream: usize,
    pub warnings: Vec<String>,
}

/// Computes all 51 features for every commit in one causal pass over the
/// (outlier-filtered) stream and joins labels by hash.
///
/// Without a label file every row is kept unlabeled. With one, unlabeled
/// commits are clean when the file declares complete coverage and dropped
/// otherwise.
pub fn extract_all(
    commits: &[CommitRecord],
    prs: &PrIndex,
    labels: Option<&LabelFile>,
    registry: &Registry,
) -> (Vec<FeatureVector>, ExtractionSummary) {
    let mut summary = ExtractionSummary {
        commits: commits.len(),
        ..Default::default()
    };
    let path_results: Vec<PathStats> = commits
        .par_iter()
        .map(|c| path_features(c, registry))
        .collect();

    let mut index = HistoryIndex::default();
    let mut rows = Vec::with_capacity(commits.len());
    for (commit, path) in commits.iter().zip(path_results) {
        summary.parse_failures += path.parse_failures;
        let resolution = map_commit_to_pr(commit, prs);
        let pr_match = match resolution {
            Resolution::Matched(m) => {
                summary.pr_matched += 1;
                match m.kind {
                    crate::forge::MatchKind::Hash => summary.pr_matched_by_hash += 1,
                    crate::forge::MatchKind::Message => summary.pr_matched_by_message += 1,
                }
                Some(m)
            }
            Resolution::Ambiguous => {
                summary.ambiguous_messages += 1;
                None
            }
            Resolution::Unmatched => None,
        };

        let size = size_diffusion(commit);
        let hist = history(commit, &index);
        let exp = experience(commit, &index);
        let rev = review(pr_match.as_ref());
        let wf = workflow(commit, pr_match.as_ref(), &index);
        index.record(commit);

        let values = assemble(&size, &hist, &exp, &rev, &wf, &path.features);
        let label = match labels {
            None => None,
            Some(file) => match file.labels.get(&commit.hash) {
                Some(l) => Some(*l),
                None if file.complete => Some(Label::Clean),
                None => {
                    summary.unlabeled_dropped += 1;
                    continue;
                }
            },
        };
        rows.push(FeatureVector {
            commit_hash: commit.hash.clone(),
            timestamp: commit.author_time,
            values,
            label,
        });
    }
    if summary.unlabeled_dropped > 0 {
        let msg = format!("{} unlabeled commits dropped", summary.unlabeled_dropped);
        log::warn!("{msg}");
        summary.warnings.push(msg);
    }
    if let Some(file) = labels {
        let stream: BTreeSet<&str> = commits.iter().map(|c| c.hash.as_str()).collect();
        for hash in file.labels.keys() {
            if !stream.contains(hash.as_str()) {
                summary.labels_not_in_stream += 1;
                let msg = format!("label for {hash} has no commit in the stream");
                log::warn!("{msg}");
                summary.warnings.push(msg);
            }
        }
    }
    summary.rows = rows.len();
    (rows, summary)
}

fn assemble(
    s: &SizeDiffusion,
    h: &History,
    e: &Experience,
    r: &Review,
    w: &Workflow,
    p: &PathFeatures,
) -> Vec<f64> {
    let v = vec![
        s.la, s.ld, s.lt, s.ns, s.nd, s.nf, s.ent, h.nuc, h.ndev, h.age, e.exp, e.rexp, e.sexp,
        e.aware, r.iter, r.nrev, r.ncom, r.agerev, w.dur, w.nth, w.c_la, w.c_ld, w.share, w.c_ns,
        w.c_nd, w.c_nf, w.c_ent, w.rel_nth, w.rel_dur, w.dev_nth, w.dev_dur, w.prcom, w.prcom_r,
        p.fun, p.funt, p.fundiff, p.funa, p.fund, p.funu, p.asta, p.astd, p.astu, p.sasta,
        p.sastd, p.casta, p.castd, p.pasta, p.pastd, p.deptha, p.depthd, p.depthu,
    ];
    debug_assert_eq!(v.len(), NUM_FEATURES);
    v
}
