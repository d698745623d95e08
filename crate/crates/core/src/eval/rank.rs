use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// A test row as seen by the rankers: model score plus raw sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub hash: String,
    pub score: f64,
    /// LA + LD in raw lines.
    pub effort: f64,
    /// Raw LT.
    pub lt: f64,
    pub defective: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEntry {
    pub hash: String,
    pub score: f64,
    pub effort: f64,
    pub is_defective: bool,
}

/// Entries in inspection order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RankedList {
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn hashes(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.hash.as_str()).collect()
    }

    fn from_sorted(rows: Vec<&Scored>) -> Self {
        RankedList {
            entries: rows
                .into_iter()
                .map(|r| RankedEntry {
                    hash: r.hash.clone(),
                    score: r.score,
                    effort: r.effort,
                    is_defective: r.defective,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unsupervised {
    Lt,
    Churn,
}

fn desc(a: f64, b: f64) -> Ordering {
    b.total_cmp(&a)
}

/// Commits classified defect-prone (score > 0.5) first, each group ordered
/// by score / (effort + 1), highest first; ties by hash.
pub fn rank_cbs_plus(rows: &[Scored]) -> RankedList {
    let ratio = |r: &Scored| r.score / (r.effort + 1.0);
    let mut v: Vec<&Scored> = rows.iter().collect();
    v.sort_by(|a, b| {
        (b.score > 0.5)
            .cmp(&(a.score > 0.5))
            .then_with(|| desc(ratio(a), ratio(b)))
            .then_with(|| a.hash.cmp(&b.hash))
    });
    RankedList::from_sorted(v)
}

/// Smallest first by LT or by churn; ties by hash.
pub fn rank_unsupervised(rows: &[Scored], strategy: Unsupervised) -> RankedList {
    let key = |r: &Scored| match strategy {
        Unsupervised::Lt => r.lt,
        Unsupervised::Churn => r.effort,
    };
    let mut v: Vec<&Scored> = rows.iter().collect();
    v.sort_by(|a, b| key(a).total_cmp(&key(b)).then_with(|| a.hash.cmp(&b.hash)));
    RankedList {
        entries: v
            .into_iter()
            .map(|r| RankedEntry {
                hash: r.hash.clone(),
                score: key(r),
                effort: r.effort,
                is_defective: r.defective,
            })
            .collect(),
    }
}

/// Highest score first; ties by hash.
pub fn rank_by_score(rows: &[Scored]) -> RankedList {
    let mut v: Vec<&Scored> = rows.iter().collect();
    v.sort_by(|a, b| desc(a.score, b.score).then_with(|| a.hash.cmp(&b.hash)));
    RankedList::from_sorted(v)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EffortMetrics {
    pub r_at_20: f64,
    pub f1_at_20: f64,
    pub pci_at_20: f64,
    /// Clean commits ranked before the first defective one.
    pub ifa: usize,
}

/// Inspects the longest prefix of the ranking whose cumulative effort stays
/// within `budget` of the total.
pub fn effort_metrics(ranking: &RankedList, budget: f64) -> EffortMetrics {
    let e = &ranking.entries;
    let total: f64 = e.iter().map(|x| x.effort).sum();
    let limit = budget * total;
    let mut spent = 0.0;
    let mut inspected = 0;
    for x in e {
        if spent + x.effort <= limit {
            spent += x.effort;
            inspected += 1;
        } else {
            break;
        }
    }
    let defects = e.iter().filter(|x| x.is_defective).count();
    let found = e[..inspected].iter().filter(|x| x.is_defective).count();
    let recall = if defects == 0 { 0.0 } else { found as f64 / defects as f64 };
    let precision = if inspected == 0 { 0.0 } else { found as f64 / inspected as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    EffortMetrics {
        r_at_20: recall,
        f1_at_20: f1,
        pci_at_20: if e.is_empty() { 0.0 } else { inspected as f64 / e.len() as f64 },
        ifa: e.iter().position(|x| x.is_defective).unwrap_or(e.len()),
    }
}
