use serde::Serialize;

use super::stats::{cliffs_delta, EffectClass};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportanceGroup {
    /// 1 is the most important group.
    pub rank: usize,
    pub members: Vec<String>,
    /// Median of each member's samples, in member order.
    pub medians: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ImportanceGroups {
    pub groups: Vec<ImportanceGroup>,
}

impl ImportanceGroups {
    pub fn rank_of(&self, feature: &str) -> Option<usize> {
        self.groups
            .iter()
            .find(|g| g.members.iter().any(|m| m == feature))
            .map(|g| g.rank)
    }
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

/// Split point `k` (first group `..k`) of the ordered medians maximizing
/// `Σ n_g (median_g − median_all)²`; the smallest such `k` on ties.
pub fn best_split(medians: &[f64]) -> usize {
    let grand = median(medians);
    let mut best = (1, f64::NEG_INFINITY);
    for k in 1..medians.len() {
        let (l, r) = medians.split_at(k);
        let score = l.len() as f64 * (median(l) - grand).powi(2) + r.len() as f64 * (median(r) - grand).powi(2);
        if score > best.1 {
            best = (k, score);
        }
    }
    best.0
}

fn partition(medians: &[f64], offset: usize, out: &mut Vec<(usize, usize)>) {
    if medians.len() <= 1 {
        out.push((offset, offset + medians.len()));
        return;
    }
    let k = best_split(medians);
    partition(&medians[..k], offset, out);
    partition(&medians[k..], offset + k, out);
}

/// Ranks features into groups of statistically indistinguishable
/// importance: features ordered by descending median are split recursively
/// by median deviation, then adjacent groups whose pooled samples differ
/// negligibly (|Cliff's δ| < 0.147) are merged, smallest δ first.
pub fn npsk_groups(distributions: &[(String, Vec<f64>)]) -> ImportanceGroups {
    let mut feats: Vec<(&str, &[f64], f64)> = distributions
        .iter()
        .map(|(n, s)| (n.as_str(), s.as_slice(), median(s)))
        .collect();
    feats.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.0.cmp(b.0)));
    if feats.is_empty() {
        return ImportanceGroups::default();
    }
    let medians: Vec<f64> = feats.iter().map(|f| f.2).collect();
    let mut spans = Vec::new();
    partition(&medians, 0, &mut spans);

    let pooled = |(a, b): (usize, usize)| -> Vec<f64> {
        feats[a..b].iter().flat_map(|f| f.1.iter().copied()).collect()
    };
    loop {
        let mut merge: Option<(usize, f64)> = None;
        for i in 0..spans.len().saturating_sub(1) {
            let (d, class) = cliffs_delta(&pooled(spans[i]), &pooled(spans[i + 1]));
            if class == EffectClass::N && merge.is_none_or(|(_, m)| d.abs() < m) {
                merge = Some((i, d.abs()));
            }
        }
        let Some((i, _)) = merge else { break };
        spans[i].1 = spans[i + 1].1;
        spans.remove(i + 1);
    }

    ImportanceGroups {
        groups: spans
            .into_iter()
            .enumerate()
            .map(|(rank, (a, b))| ImportanceGroup {
                rank: rank + 1,
                members: feats[a..b].iter().map(|f| f.0.to_owned()).collect(),
                medians: feats[a..b].iter().map(|f| f.2).collect(),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist(name: &str, center: f64, spread: f64) -> (String, Vec<f64>) {
        let s = (0..100).map(|i| center + spread * ((i as f64 * 0.7).sin())).collect();
        (name.into(), s)
    }

    #[test]
    fn identical_distributions_merge() {
        let g = npsk_groups(&[dist("a", 0.3, 0.1), dist("b", 0.3, 0.1)]);
        assert_eq!(g.groups.len(), 1);
        assert_eq!(g.groups[0].members, vec!["a", "b"]);
    }

    #[test]
    fn separated_distributions_stay_apart() {
        let g = npsk_groups(&[dist("low", 0.1, 0.01), dist("high", 0.5, 0.01)]);
        assert_eq!(g.groups.len(), 2);
        assert_eq!(g.rank_of("high"), Some(1));
        assert_eq!(g.rank_of("low"), Some(2));
    }

    #[test]
    fn two_overlapping_high_and_one_low() {
        let g = npsk_groups(&[dist("f3", 0.05, 0.01), dist("f1", 0.403, 0.1), dist("f2", 0.40, 0.1)]);
        assert_eq!(g.groups.len(), 2);
        assert_eq!(g.groups[0].members, vec!["f1", "f2"]);
        assert_eq!(g.groups[1].members, vec!["f3"]);
        assert_eq!(g.groups[1].rank, 2);
    }

    #[test]
    fn single_feature_single_group() {
        let g = npsk_groups(&[dist("x", 0.2, 0.1)]);
        assert_eq!(g.groups.len(), 1);
        assert_eq!(g.groups[0].rank, 1);
    }

    fn exhaustive(m: &[f64]) -> usize {
        let grand = median(m);
        let scores: Vec<f64> = (1..m.len())
            .map(|k| k as f64 * (median(&m[..k]) - grand).powi(2) + (m.len() - k) as f64 * (median(&m[k..]) - grand).powi(2))
            .collect();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        scores.iter().position(|s| *s == max).unwrap() + 1
    }

    proptest! {
        #[test]
        fn split_is_the_exhaustive_optimum(mut m in prop::collection::vec(0.0f64..1.0, 2..12)) {
            m.sort_by(|a, b| b.total_cmp(a));
            prop_assert_eq!(best_split(&m), exhaustive(&m));
        }

        #[test]
        fn ranks_ignore_input_order(
            centers in prop::collection::vec(0.0f64..1.0, 1..8),
            rot in 0usize..8,
        ) {
            let input: Vec<(String, Vec<f64>)> = centers
                .iter()
                .enumerate()
                .map(|(i, c)| dist(&format!("f{i}"), *c, 0.05))
                .collect();
            let mut rotated = input.clone();
            rotated.rotate_left(rot % input.len());
            let a = npsk_groups(&input);
            let b = npsk_groups(&rotated);
            for (name, _) in &input {
                prop_assert_eq!(a.rank_of(name), b.rank_of(name));
            }
        }
    }
}
