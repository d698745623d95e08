use std::fmt::Write;

use serde::Serialize;

use super::stats::{stars, StatResult};
use crate::features::format_g6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub project: String,
    pub scheme: String,
    pub feature_set: String,
    pub fold: usize,
    pub metric: String,
    pub value: f64,
}

pub fn metrics_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from("project,scheme,feature_set,fold,metric,value\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.project,
            r.scheme,
            r.feature_set,
            r.fold,
            r.metric,
            format_g6(r.value)
        );
    }
    out
}

/// One metric of a candidate configuration against a baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub metric: String,
    pub baseline: f64,
    pub candidate: f64,
    pub stat: StatResult,
}

impl Comparison {
    pub fn change_pct(&self) -> Option<f64> {
        (self.baseline != 0.0).then(|| (self.candidate - self.baseline) / self.baseline.abs() * 100.0)
    }
}

/// Markdown table: baseline value, candidate value with relative change,
/// significance stars of the adjusted p value and the effect-size letter.
pub fn comparison_markdown(title: &str, baseline: &str, candidate: &str, rows: &[Comparison]) -> String {
    let mut out = format!("### {title}\n\n| metric | {baseline} | {candidate} | change | sig | effect | p (adj) |\n");
    out.push_str("|---|---:|---:|---:|:-:|:-:|---:|\n");
    for c in rows {
        let change = match c.change_pct() {
            Some(p) => format!("{p:+.1}%"),
            None => "n/a".into(),
        };
        let _ = writeln!(
            out,
            "| {} | {:.3} | {:.3} | {} | {} | {} | {} |",
            c.metric,
            c.baseline,
            c.candidate,
            change,
            stars(c.stat.p_adjusted),
            c.stat.effect_class.as_str(),
            format_g6(c.stat.p_adjusted)
        );
    }
    out
}
