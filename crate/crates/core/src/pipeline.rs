//! End-to-end runs shared by the command line and the acceptance suite.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ast::Registry;
use crate::dataset::{
    downsample, log_transform, split_cv, split_time, standardize, Dataset, Effort, Scheme, ScaleOn,
    SplitPlan, TimeMode, FRAME_SECONDS,
};
use crate::eval::{
    confusion_metrics, effort_metrics, rank_by_score, rank_cbs_plus, rank_unsupervised,
    MetricsReport, Scored, Unsupervised,
};
use crate::features::{extract_all, ExtractionSummary, FeatureSet, FeatureVector, LabelFile};
use crate::forge::{PrIndex, PullRequestRecord};
use crate::learner::{train_forest, train_linear, ForestParams, LinearTarget};
use crate::miner::{filter_outliers, walk_history, MinerConfig, MiningWarning};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ExtractReport {
    pub mined: usize,
    pub outliers_removed: usize,
    pub mining_warnings: Vec<MiningWarning>,
    pub extraction: ExtractionSummary,
}

impl ExtractReport {
    pub fn pr_match_rate(&self) -> f64 {
        let n = self.extraction.commits;
        if n == 0 { 0.0 } else { self.extraction.pr_matched as f64 / n as f64 }
    }
}

/// Mines the repository, drops outliers and computes every feature.
pub fn extract(
    repo: &Path,
    miner: &MinerConfig,
    prs: Vec<PullRequestRecord>,
    labels: Option<&LabelFile>,
    registry: &Registry,
) -> Result<(Vec<FeatureVector>, ExtractReport)> {
    let mined = walk_history(repo, miner)?;
    let n = mined.commits.len();
    let (commits, outliers) = filter_outliers(mined.commits);
    let index = PrIndex::new(prs);
    let (rows, extraction) = extract_all(&commits, &index, labels, registry);
    Ok((
        rows,
        ExtractReport {
            mined: n,
            outliers_removed: outliers.removed,
            mining_warnings: mined.warnings,
            extraction,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    /// Random forest, inspection by descending probability.
    Rf,
    /// Linear regression on defect density.
    Ealr,
    /// Random forest with classify-before-sort ranking.
    CbsPlus,
    Lt,
    Churn,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Rf => "rf",
            ModelKind::Ealr => "ealr",
            ModelKind::CbsPlus => "cbs+",
            ModelKind::Lt => "lt",
            ModelKind::Churn => "churn",
        }
    }

    pub fn is_classifier(self) -> bool {
        matches!(self, ModelKind::Rf | ModelKind::CbsPlus)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rf" => Ok(ModelKind::Rf),
            "ealr" => Ok(ModelKind::Ealr),
            "cbs+" | "cbs" => Ok(ModelKind::CbsPlus),
            "lt" => Ok(ModelKind::Lt),
            "churn" => Ok(ModelKind::Churn),
            other => Err(format!("unknown model `{other}` (expected rf, ealr, cbs+, lt or churn)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub feature_set: FeatureSet,
    pub scheme: Scheme,
    pub model: ModelKind,
    pub seed: u64,
    pub budget: f64,
    pub censor: bool,
    pub scale_on: ScaleOn,
    pub folds: usize,
    pub repeats: usize,
    pub trees: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            feature_set: FeatureSet::All,
            scheme: Scheme::Cv,
            model: ModelKind::Rf,
            seed: 0,
            budget: 0.2,
            censor: false,
            scale_on: ScaleOn::Train,
            folds: 10,
            repeats: 10,
            trees: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldOutcome {
    pub fold: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub metrics: MetricsReport,
    /// Forest importances in `Evaluation::feature_names` order.
    pub importance: Option<Vec<f64>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub feature_names: Vec<String>,
    pub plan: SplitPlan,
    pub folds: Vec<FoldOutcome>,
}

impl Evaluation {
    /// Per-fold values of one metric, in fold order.
    pub fn metric(&self, name: &str) -> Vec<f64> {
        self.folds
            .iter()
            .filter_map(|f| f.metrics.values().into_iter().find(|(n, _)| *n == name).map(|(_, v)| v))
            .collect()
    }

    /// `(metric, mean, population std)` over folds.
    pub fn summary(&self) -> Vec<(&'static str, f64, f64)> {
        let Some(first) = self.folds.first() else { return Vec::new() };
        first
            .metrics
            .values()
            .into_iter()
            .map(|(name, _)| {
                let v = self.metric(name);
                let n = v.len() as f64;
                let mean = v.iter().sum::<f64>() / n;
                let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                (name, mean, var.sqrt())
            })
            .collect()
    }
}

/// Seed for fold `fold`, decorrelated from neighbouring folds.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    let mut z = seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn plan(ds: &Dataset, cfg: &EvalConfig) -> Result<SplitPlan> {
    match cfg.scheme {
        Scheme::Cv => {
            let source = if cfg.censor { censored(ds) } else { ds.clone() };
            let mut p = split_cv(&source, cfg.folds, cfg.repeats, cfg.seed)?;
            if cfg.censor {
                // map back to row indices of the uncensored dataset
                let pos: Vec<usize> = source
                    .rows
                    .iter()
                    .map(|r| ds.rows.binary_search_by(|x| x.commit_hash.cmp(&r.commit_hash)).expect("censored row is in the dataset"))
                    .collect();
                for f in &mut p.folds {
                    f.train.iter_mut().for_each(|i| *i = pos[*i]);
                    f.test.iter_mut().for_each(|i| *i = pos[*i]);
                }
            }
            Ok(p)
        }
        Scheme::ShortTerm => split_time(ds, FRAME_SECONDS, TimeMode::Short, cfg.censor),
        Scheme::LongTerm => split_time(ds, FRAME_SECONDS, TimeMode::Long, cfg.censor),
    }
}

fn censored(ds: &Dataset) -> Dataset {
    let t_max = ds.rows.iter().map(|r| r.timestamp).max().unwrap_or(0);
    let ids: Vec<usize> = (0..ds.len()).filter(|&i| ds.rows[i].timestamp <= t_max - FRAME_SECONDS).collect();
    ds.subset(&ids)
}

fn scored(ds: &Dataset, efforts: &[Effort], scores: &[f64]) -> Vec<Scored> {
    let labels = ds.labels();
    ds.rows
        .iter()
        .zip(efforts)
        .zip(scores)
        .zip(labels)
        .map(|(((r, e), s), l)| Scored {
            hash: r.commit_hash.clone(),
            score: *s,
            effort: e.churn,
            lt: e.lt,
            defective: l,
        })
        .collect()
}

/// Runs one fold: preprocessing fitted on the training side, training and
/// scoring. `raw` is the full, untransformed dataset.
pub fn run_fold(raw: &Dataset, fold: &crate::dataset::Fold, cfg: &EvalConfig) -> Result<FoldOutcome> {
    let seed = fold_seed(cfg.seed, fold.id);
    let train_raw = raw.subset(&fold.train);
    let test_raw = raw.subset(&fold.test);
    let test_effort = test_raw.efforts()?;
    let mut warnings = Vec::new();

    let (scores, importance) = match cfg.model {
        ModelKind::Lt | ModelKind::Churn => (vec![0.0; test_raw.len()], None),
        _ => {
            let names = cfg.feature_set.names();
            let train = log_transform(&train_raw.select(&names)?);
            let test = log_transform(&test_raw.select(&names)?);
            let (train, test, _) = standardize(&train, &test, cfg.scale_on)?;
            let (train, w) = downsample(&train, seed);
            warnings.extend(w);
            if cfg.model == ModelKind::Ealr {
                let churn: Vec<f64> = {
                    let all = train_raw.efforts()?;
                    train
                        .rows
                        .iter()
                        .map(|r| {
                            let i = train_raw
                                .rows
                                .binary_search_by(|x| x.commit_hash.cmp(&r.commit_hash))
                                .expect("downsampled row comes from the training side");
                            all[i].churn
                        })
                        .collect()
                };
                let model = train_linear(&train, LinearTarget::Density, &churn)?;
                (model.predict_dataset(&test)?, None)
            } else {
                let params = ForestParams {
                    n_trees: cfg.trees,
                    seed,
                    ..Default::default()
                };
                let forest = train_forest(&train, &params)?;
                (forest.predict_dataset(&test)?, Some(forest.importance_vector()))
            }
        }
    };

    let rows = scored(&test_raw, &test_effort, &scores);
    let ranking = match cfg.model {
        ModelKind::Rf | ModelKind::Ealr => rank_by_score(&rows),
        ModelKind::CbsPlus => rank_cbs_plus(&rows),
        ModelKind::Lt => rank_unsupervised(&rows, Unsupervised::Lt),
        ModelKind::Churn => rank_unsupervised(&rows, Unsupervised::Churn),
    };
    let confusion = if cfg.model.is_classifier() {
        let predictions: Vec<bool> = scores.iter().map(|p| *p > 0.5).collect();
        Some(confusion_metrics(&predictions, &test_raw.labels())?)
    } else {
        None
    };
    Ok(FoldOutcome {
        fold: fold.id,
        train_rows: fold.train.len(),
        test_rows: fold.test.len(),
        metrics: MetricsReport {
            confusion,
            effort: effort_metrics(&ranking, cfg.budget),
        },
        importance,
        warnings,
    })
}

/// Evaluates one configuration over every fold of its split plan. Folds run
/// in parallel on the current rayon pool; results are in fold order.
pub fn evaluate(raw: &Dataset, cfg: &EvalConfig) -> Result<Evaluation> {
    if !raw.provenance.flags.is_empty() {
        return Err(Error::InvalidData("evaluation expects an untransformed dataset".into()));
    }
    let plan = plan(raw, cfg)?;
    let folds = plan
        .folds
        .par_iter()
        .map(|f| run_fold(raw, f, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(Evaluation {
        feature_names: cfg.feature_set.names().into_iter().map(String::from).collect(),
        plan,
        folds,
    })
}

/// Per-feature importance samples, one per fold, from a forest evaluation.
pub fn importance_distributions(eval: &Evaluation) -> Vec<(String, Vec<f64>)> {
    eval.feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let samples = eval
                .folds
                .iter()
                .filter_map(|f| f.importance.as_ref().map(|v| v[j]))
                .collect();
            (name.clone(), samples)
        })
        .collect()
}
