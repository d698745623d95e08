//! Classification and effort-aware metrics, rankings and statistics.

mod npsk;
mod rank;
mod report;
mod stats;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use npsk::{best_split, npsk_groups, ImportanceGroup, ImportanceGroups};
pub use rank::{
    effort_metrics, rank_by_score, rank_cbs_plus, rank_unsupervised, EffortMetrics, RankedEntry,
    RankedList, Scored, Unsupervised,
};
pub use report::{comparison_markdown, metrics_csv, Comparison, MetricRow};
pub use stats::{
    bonferroni, cliffs_delta, cliffs_delta_naive, compare, stars, wilcoxon_signed_rank,
    wilcoxon_with, EffectClass, StatResult, WilcoxonMethod,
};

/// Precision, recall, F1 and MCC. Zero denominators give 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mcc: f64,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 { 0.0 } else { a / b }
}

pub fn confusion_metrics(predictions: &[bool], labels: &[bool]) -> Result<Confusion> {
    if predictions.len() != labels.len() {
        return Err(Error::InvalidData(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
    for (p, l) in predictions.iter().zip(labels) {
        match (p, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let (tp, fp, fn_, tn) = (tp as f64, fp as f64, fn_ as f64, tn as f64);
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = ratio(2.0 * precision * recall, precision + recall);
    let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    let mcc = if denom == 0.0 {
        0.0
    } else {
        ((tp * tn - fp * fn_) / denom.sqrt()).clamp(-1.0, 1.0)
    };
    Ok(Confusion {
        precision,
        recall,
        f1,
        mcc,
    })
}

/// One fold's metrics. Effort fields are absent for models without a
/// classification threshold and vice versa.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub confusion: Option<Confusion>,
    pub effort: EffortMetrics,
}

impl MetricsReport {
    /// `(name, value)` pairs in report order.
    pub fn values(&self) -> Vec<(&'static str, f64)> {
        let mut v = Vec::new();
        if let Some(c) = self.confusion {
            v.extend([
                ("precision", c.precision),
                ("recall", c.recall),
                ("f1", c.f1),
                ("mcc", c.mcc),
            ]);
        }
        v.extend([
            ("r_at_20", self.effort.r_at_20),
            ("f1_at_20", self.effort.f1_at_20),
            ("pci_at_20", self.effort.pci_at_20),
            ("ifa", self.effort.ifa as f64),
        ]);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> (Vec<bool>, Vec<bool>) {
        let mut p = Vec::new();
        let mut l = Vec::new();
        for (n, pv, lv) in [(tp, true, true), (fp, true, false), (fn_, false, true), (tn, false, false)] {
            p.extend(std::iter::repeat_n(pv, n));
            l.extend(std::iter::repeat_n(lv, n));
        }
        (p, l)
    }

    #[test]
    fn examples() {
        let (p, l) = counts(3, 1, 2, 4);
        let c = confusion_metrics(&p, &l).unwrap();
        assert!((c.mcc - 10.0 / 600f64.sqrt()).abs() < 1e-12);
        assert!((c.mcc - 0.4082).abs() < 1e-4);
        assert_eq!(c.precision, 0.75);
        assert_eq!(c.recall, 0.6);

        let l = vec![true, false, true, false];
        let perfect = confusion_metrics(&l, &l).unwrap();
        assert_eq!((perfect.precision, perfect.recall, perfect.f1, perfect.mcc), (1.0, 1.0, 1.0, 1.0));
        let wrong: Vec<bool> = l.iter().map(|x| !x).collect();
        assert_eq!(confusion_metrics(&wrong, &l).unwrap().mcc, -1.0);
    }

    #[test]
    fn zero_denominators() {
        let c = confusion_metrics(&[false, false], &[false, false]).unwrap();
        assert_eq!(c, Confusion::default());
        assert!(confusion_metrics(&[true], &[true, false]).is_err());
    }
}
