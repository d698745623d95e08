use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{Error, Result, DAY};

/// Six months of 30.4375 days, in seconds.
pub const FRAME_SECONDS: i64 = (6.0 * 30.4375 * DAY) as i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Cv,
    ShortTerm,
    LongTerm,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Cv => "cv",
            Scheme::ShortTerm => "short-term",
            Scheme::LongTerm => "long-term",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "cv" => Ok(Scheme::Cv),
            "short-term" => Ok(Scheme::ShortTerm),
            "long-term" => Ok(Scheme::LongTerm),
            other => Err(format!("unknown scheme `{other}` (expected cv, short-term or long-term)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeMode {
    Short,
    Long,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub id: usize,
    /// Row indices into the dataset, ascending.
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub scheme: Scheme,
    pub seed: u64,
    pub folds: Vec<Fold>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SplitPlan {
    /// Audit form with commit hashes in place of row indices.
    pub fn to_json(&self, ds: &Dataset) -> serde_json::Value {
        let hashes = |ids: &[usize]| -> Vec<&str> {
            ids.iter().map(|&i| ds.rows[i].commit_hash.as_str()).collect()
        };
        serde_json::json!({
            "scheme": self.scheme,
            "seed": self.seed,
            "folds": self.folds.iter().map(|f| serde_json::json!({
                "fold": f.id,
                "train": hashes(&f.train),
                "test": hashes(&f.test),
            })).collect::<Vec<_>>(),
        })
    }
}

/// `times` repetitions of stratified `k`-fold cross-validation. Each class is
/// shuffled and dealt round-robin over the folds, so per-fold class counts
/// differ by at most one.
pub fn split_cv(ds: &Dataset, k: usize, times: usize, seed: u64) -> Result<SplitPlan> {
    let labels = ds.labels();
    let mut pos: Vec<usize> = (0..ds.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..ds.len()).filter(|&i| !labels[i]).collect();
    if k < 2 || pos.len() < k || neg.len() < k {
        return Err(Error::InfeasibleSplit(format!(
            "{k}-fold cross-validation needs at least {k} rows per class, found {} positive and {} negative",
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = Vec::with_capacity(k * times);
    for rep in 0..times {
        pos.sort_unstable();
        neg.sort_unstable();
        pos.shuffle(&mut rng);
        neg.shuffle(&mut rng);
        let mut assign = vec![0usize; ds.len()];
        for (j, &i) in pos.iter().chain(&neg).enumerate() {
            assign[i] = j % k;
        }
        for f in 0..k {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| assign[i] == f);
            folds.push(Fold {
                id: rep * k + f,
                train,
                test,
            });
        }
    }
    Ok(SplitPlan {
        scheme: Scheme::Cv,
        seed,
        folds,
        warnings: Vec::new(),
    })
}

/// Time-ordered splits over half-open frames of `frame` seconds.
///
/// Short-term pairs each frame (train) with the next one (test), frames
/// anchored at the earliest timestamp. Long-term tests on the window
/// `(t_max - frame, t_max]` and trains on everything older. With `censor`
/// that final window of the whole stream is dropped first.
pub fn split_time(ds: &Dataset, frame: i64, mode: TimeMode, censor: bool) -> Result<SplitPlan> {
    if ds.is_empty() {
        return Err(Error::InfeasibleSplit("empty dataset".into()));
    }
    let t_max = ds.rows.iter().map(|r| r.timestamp).max().unwrap_or(0);
    let ids: Vec<usize> = (0..ds.len())
        .filter(|&i| !censor || ds.rows[i].timestamp <= t_max - frame)
        .collect();
    if ids.is_empty() {
        return Err(Error::InfeasibleSplit("censoring removed every row".into()));
    }
    let ts = |i: usize| ds.rows[i].timestamp;
    let mut warnings = Vec::new();
    let folds = match mode {
        TimeMode::Short => {
            let t0 = ids.iter().map(|&i| ts(i)).min().unwrap_or(0);
            let frame_of = |i: usize| ((ts(i) - t0) / frame) as usize;
            let frames = ids.iter().map(|&i| frame_of(i)).max().unwrap_or(0) + 1;
            if frames < 2 {
                return Err(Error::InfeasibleSplit(format!(
                    "short-term validation needs at least two frames, data spans {frames}"
                )));
            }
            let mut by_frame = vec![Vec::new(); frames];
            for &i in &ids {
                by_frame[frame_of(i)].push(i);
            }
            let mut folds = Vec::new();
            for f in 0..frames - 1 {
                if by_frame[f].is_empty() || by_frame[f + 1].is_empty() {
                    warnings.push(format!("frame pair {f}/{} skipped: empty side", f + 1));
                    continue;
                }
                folds.push(Fold {
                    id: folds.len(),
                    train: by_frame[f].clone(),
                    test: by_frame[f + 1].clone(),
                });
            }
            folds
        }
        TimeMode::Long => {
            let last = ids.iter().map(|&i| ts(i)).max().unwrap_or(0);
            let (test, train): (Vec<usize>, Vec<usize>) =
                ids.iter().partition(|&&i| ts(i) > last - frame);
            if train.is_empty() || test.is_empty() {
                warnings.push("long-term split has an empty side".into());
                Vec::new()
            } else {
                vec![Fold { id: 0, train, test }]
            }
        }
    };
    for w in &warnings {
        log::warn!("{w}");
    }
    if folds.is_empty() {
        return Err(Error::InfeasibleSplit("no fold has both training and test rows".into()));
    }
    Ok(SplitPlan {
        scheme: match mode {
            TimeMode::Short => Scheme::ShortTerm,
            TimeMode::Long => Scheme::LongTerm,
        },
        seed: 0,
        folds,
        warnings,
    })
}
