use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WilcoxonMethod {
    /// Exact for n ≤ 20, normal approximation above.
    Auto,
    Exact,
    Normal,
}

/// Largest sample (after dropping zero differences) handled exactly.
pub const EXACT_LIMIT: usize = 20;

/// Two-sided Wilcoxon signed-rank p value for paired samples.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<f64> {
    wilcoxon_with(a, b, WilcoxonMethod::Auto)
}

/// Mid-ranks of `|d|`, doubled so that they are integers.
fn doubled_ranks(diffs: &[f64]) -> Vec<u64> {
    let mut idx: Vec<usize> = (0..diffs.len()).collect();
    idx.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
    let mut ranks = vec![0u64; diffs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && diffs[idx[j + 1]].abs() == diffs[idx[i]].abs() {
            j += 1;
        }
        // ranks i+1..=j+1 averaged, times two
        let r = (i + 1 + j + 1) as u64;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn wilcoxon_with(a: &[f64], b: &[f64], method: WilcoxonMethod) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidData(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(1.0);
    }
    let ranks = doubled_ranks(&diffs);
    let w2: u64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let exact = match method {
        WilcoxonMethod::Auto => n <= EXACT_LIMIT,
        WilcoxonMethod::Exact => true,
        WilcoxonMethod::Normal => false,
    };
    if exact {
        if n > 30 {
            return Err(Error::InvalidData(format!("exact test on {n} pairs is too expensive")));
        }
        let total: u64 = ranks.iter().sum();
        let mut count = vec![0f64; total as usize + 1];
        count[0] = 1.0;
        for &r in &ranks {
            for s in (r as usize..=total as usize).rev() {
                count[s] += count[s - r as usize];
            }
        }
        let all = 2f64.powi(n as i32);
        let lower: f64 = count[..=w2 as usize].iter().sum::<f64>() / all;
        let upper: f64 = count[w2 as usize..].iter().sum::<f64>() / all;
        Ok((2.0 * lower.min(upper)).min(1.0))
    } else {
        let nf = n as f64;
        let w = w2 as f64 / 2.0;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut tie = 0.0;
        let mut sorted = ranks.clone();
        sorted.sort_unstable();
        for g in sorted.chunk_by(|x, y| x == y) {
            let t = g.len() as f64;
            tie += t * t * t - t;
        }
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie / 48.0;
        if var <= 0.0 {
            return Ok(1.0);
        }
        let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::standard();
        Ok((2.0 * normal.sf(z)).min(1.0))
    }
}

/// `min(1, m·p)` for each p.
pub fn bonferroni(p_values: &[f64], m: usize) -> Vec<f64> {
    p_values.iter().map(|p| (p * m as f64).min(1.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EffectClass {
    N,
    S,
    M,
    L,
}

impl EffectClass {
    pub fn of(delta: f64) -> Self {
        let d = delta.abs();
        if d < 0.147 {
            EffectClass::N
        } else if d < 0.33 {
            EffectClass::S
        } else if d < 0.474 {
            EffectClass::M
        } else {
            EffectClass::L
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EffectClass::N => "N",
            EffectClass::S => "S",
            EffectClass::M => "M",
            EffectClass::L => "L",
        }
    }
}

/// Reference implementation comparing every pair.
pub fn cliffs_delta_naive(a: &[f64], b: &[f64]) -> f64 {
    let mut s: i64 = 0;
    for x in a {
        for y in b {
            s += match x.partial_cmp(y) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    s as f64 / (a.len() * b.len()) as f64
}

/// Cliff's delta `P(x > y) − P(x < y)` by sorting `b` and binary search.
pub fn cliffs_delta(a: &[f64], b: &[f64]) -> (f64, EffectClass) {
    if a.is_empty() || b.is_empty() {
        return (0.0, EffectClass::N);
    }
    let mut sb = b.to_vec();
    sb.sort_by(f64::total_cmp);
    let mut s: i64 = 0;
    for x in a {
        let below = sb.partition_point(|y| y < x) as i64;
        let not_above = sb.partition_point(|y| y <= x) as i64;
        s += below - (sb.len() as i64 - not_above);
    }
    let d = s as f64 / (a.len() * b.len()) as f64;
    (d, EffectClass::of(d))
}

pub fn stars(p: f64) -> &'static str {
    if p < 1e-4 {
        "****"
    } else if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        "ns"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub delta: f64,
    pub effect_class: EffectClass,
    /// Sign of `delta`: 1 when the candidate tends to be larger.
    pub direction: i8,
}

/// Paired comparison of a candidate against a baseline over the same folds,
/// Bonferroni-adjusted for `m` comparisons.
pub fn compare(candidate: &[f64], baseline: &[f64], m: usize) -> Result<StatResult> {
    let p_raw = wilcoxon_signed_rank(candidate, baseline)?;
    let (delta, effect_class) = cliffs_delta(candidate, baseline);
    Ok(StatResult {
        p_raw,
        p_adjusted: bonferroni(&[p_raw], m)[0],
        delta,
        effect_class,
        direction: if delta > 0.0 { 1 } else if delta < 0.0 { -1 } else { 0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn both_modes_match_scipy_where_they_disagree_most() {
        // W+ = 46 at n = 15: the largest gap between the two modes
        let d = [-1.0, -2.0, -3.0, 4.0, -5.0, -6.0, -7.0, -8.0, -9.0, -10.0, -11.0, -12.0, 13.0, 14.0, 15.0];
        let zeros = [0.0; 15];
        let exact = wilcoxon_with(&d, &zeros, WilcoxonMethod::Exact).unwrap();
        let normal = wilcoxon_with(&d, &zeros, WilcoxonMethod::Normal).unwrap();
        assert!((exact - 0.45428466796875).abs() < 1e-12, "{exact}");
        assert!((normal - 0.44323107559105224).abs() < 1e-9, "{normal}");
        assert!((exact - normal).abs() > 0.011);
    }

    /// Enumerates all 2^n sign patterns.
    pub(crate) fn brute_force(diffs: &[f64]) -> f64 {
        let d: Vec<f64> = diffs.iter().copied().filter(|x| *x != 0.0).collect();
        let ranks = doubled_ranks(&d);
        let w: u64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
        let n = d.len();
        let (mut le, mut ge) = (0u64, 0u64);
        for mask in 0u64..(1 << n) {
            let s: u64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            if s <= w {
                le += 1;
            }
            if s >= w {
                ge += 1;
            }
        }
        let all = (1u64 << n) as f64;
        (2.0 * (le.min(ge) as f64) / all).min(1.0)
    }

    #[test]
    fn examples() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(wilcoxon_signed_rank(&a, &a).unwrap(), 1.0);
        let p = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5]).unwrap();
        assert!((p - 0.0625).abs() < 1e-15);
        assert!(wilcoxon_signed_rank(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn strong_shift_on_100_pairs() {
        let a: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin() + 2.0).collect();
        let b: Vec<f64> = (0..100).map(|i| (i as f64 * 0.91).cos()).collect();
        assert!(wilcoxon_signed_rank(&a, &b).unwrap() < 1e-4);
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(doubled_ranks(&[1.0, -1.0, 3.0, 2.0]), vec![3, 3, 8, 6]);
    }

    #[test]
    fn bonferroni_examples() {
        assert_eq!(bonferroni(&[0.01], 3)[0], 0.03);
        assert_eq!(bonferroni(&[0.5], 3)[0], 1.0);
        assert_eq!(bonferroni(&[0.2], 1)[0], 0.2);
    }

    #[test]
    fn cliffs_examples() {
        assert_eq!(cliffs_delta(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), (0.0, EffectClass::N));
        assert_eq!(cliffs_delta(&[4.0, 5.0], &[1.0, 2.0]), (1.0, EffectClass::L));
        assert_eq!(cliffs_delta(&[1.0, 3.0], &[2.0, 2.0]), (0.0, EffectClass::N));
        assert_eq!(EffectClass::of(0.146), EffectClass::N);
        assert_eq!(EffectClass::of(-0.147), EffectClass::S);
        assert_eq!(EffectClass::of(0.33), EffectClass::M);
        assert_eq!(EffectClass::of(0.474), EffectClass::L);
    }

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.00001), "****");
        assert_eq!(stars(0.0005), "***");
        assert_eq!(stars(0.005), "**");
        assert_eq!(stars(0.05), "*");
        assert_eq!(stars(0.5), "ns");
    }

    proptest! {
        #[test]
        fn exact_matches_enumeration(d in prop::collection::vec(-4i32..5, 1..14)) {
            let a: Vec<f64> = d.iter().map(|x| *x as f64).collect();
            let zeros = vec![0.0; a.len()];
            let ours = wilcoxon_with(&a, &zeros, WilcoxonMethod::Exact).unwrap();
            let nonzero = a.iter().any(|x| *x != 0.0);
            let oracle = if nonzero { brute_force(&a) } else { 1.0 };
            prop_assert!((ours - oracle).abs() < 1e-12);
        }

        #[test]
        fn fast_cliffs_equals_naive(
            a in prop::collection::vec(-20i32..20, 1..40),
            b in prop::collection::vec(-20i32..20, 1..40),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let (d, _) = cliffs_delta(&a, &b);
            prop_assert_eq!(d, cliffs_delta_naive(&a, &b));
            prop_assert_eq!(cliffs_delta(&b, &a).0, -d);
        }
    }
}
