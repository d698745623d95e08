use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::{Error, Result};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Candidate features per split; `None` means ⌈√d⌉.
    pub max_features: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: None,
            min_leaf: 1,
            max_depth: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    /// Bootstrap class counts `[clean, defective]`.
    Leaf { counts: [u32; 2] },
    /// Rows with `x[feature] <= threshold` go to `left`. `gain` is the
    /// impurity decrease weighted by the node's share of the root sample.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        gain: f64,
    },
}

/// Nodes in creation order; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    fn leaf_fraction(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { counts } => {
                    return counts[1] as f64 / (counts[0] + counts[1]) as f64;
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub version: u32,
    pub params: ForestParams,
    pub feature_names: Vec<String>,
    pub trees: Vec<Tree>,
}

fn gini(c0: f64, c1: f64) -> f64 {
    let n = c0 + c1;
    if n == 0.0 {
        0.0
    } else {
        1.0 - (c0 * c0 + c1 * c1) / (n * n)
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [bool],
    d: usize,
    mtry: usize,
    min_leaf: usize,
    max_depth: usize,
    root_n: f64,
    nodes: Vec<Node>,
    scratch: Vec<(f64, bool)>,
}

struct Best {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> [u32; 2] {
        let pos = rows.iter().filter(|&&r| self.y[r]).count() as u32;
        [rows.len() as u32 - pos, pos]
    }

    /// Best split over `features`, scanning thresholds in ascending order so
    /// that the first maximum found is the (lowest feature, lowest threshold).
    fn best_split(&mut self, rows: &[usize], features: &[usize], counts: [u32; 2]) -> Option<Best> {
        let n = rows.len() as f64;
        let parent = gini(counts[0] as f64, counts[1] as f64);
        let mut best: Option<Best> = None;
        for &f in features {
            self.scratch.clear();
            self.scratch.extend(rows.iter().map(|&r| (self.x[r][f], self.y[r])));
            self.scratch
                .sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let (mut l0, mut l1) = (0.0, 0.0);
            let (t0, t1) = (counts[0] as f64, counts[1] as f64);
            for i in 0..self.scratch.len() - 1 {
                if self.scratch[i].1 {
                    l1 += 1.0;
                } else {
                    l0 += 1.0;
                }
                let (a, b) = (self.scratch[i].0, self.scratch[i + 1].0);
                if a == b {
                    continue;
                }
                let nl = (i + 1) as f64;
                if (i + 1) < self.min_leaf || rows.len() - (i + 1) < self.min_leaf {
                    continue;
                }
                let (r0, r1) = (t0 - l0, t1 - l1);
                let child = nl / n * gini(l0, l1) + (n - nl) / n * gini(r0, r1);
                let decrease = parent - child;
                if best.as_ref().is_none_or(|b| decrease > b.decrease + 1e-15) {
                    let mut threshold = a + (b - a) / 2.0;
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(Best {
                        feature: f,
                        threshold,
                        decrease: decrease.max(0.0),
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, rng: &mut ChaCha8Rng, rows: Vec<usize>) {
        // (node slot, rows, depth)
        let mut stack = vec![(0usize, rows, 0usize)];
        self.nodes.push(Node::Leaf { counts: [0, 0] });
        while let Some((slot, rows, depth)) = stack.pop() {
            let counts = self.counts(&rows);
            if counts[0] == 0 || counts[1] == 0 || depth >= self.max_depth || rows.len() < 2 * self.min_leaf {
                self.nodes[slot] = Node::Leaf { counts };
                continue;
            }
            let mut features: Vec<usize> = sample(rng, self.d, self.mtry).into_vec();
            features.sort_unstable();
            let mut best = self.best_split(&rows, &features, counts);
            if best.is_none() && self.mtry < self.d {
                let all: Vec<usize> = (0..self.d).collect();
                best = self.best_split(&rows, &all, counts);
            }
            let Some(best) = best else {
                self.nodes[slot] = Node::Leaf { counts };
                continue;
            };
            let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&r| self.x[r][best.feature] <= best.threshold);
            let left = self.nodes.len();
            let right = left + 1;
            self.nodes.push(Node::Leaf { counts: [0, 0] });
            self.nodes.push(Node::Leaf { counts: [0, 0] });
            self.nodes[slot] = Node::Split {
                feature: best.feature,
                threshold: best.threshold,
                left,
                right,
                gain: rows.len() as f64 / self.root_n * best.decrease,
            };
            stack.push((right, right_rows, depth + 1));
            stack.push((left, left_rows, depth + 1));
        }
    }
}

fn tree_rng(seed: u64, tree: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64);
    rng
}

/// Grows `params.n_trees` Gini trees on bootstrap samples of the dataset's
/// rows (taken in canonical hash order). Single-class data yields a forest
/// of one-leaf trees.
pub fn train_forest(train: &Dataset, params: &ForestParams) -> Result<ForestModel> {
    if train.is_empty() {
        return Err(Error::InvalidData("cannot train a forest on no rows".into()));
    }
    let x = train.matrix();
    let y = train.labels();
    let d = train.feature_names.len();
    if d == 0 {
        return Err(Error::InvalidData("cannot train a forest without features".into()));
    }
    let pos = y.iter().filter(|l| **l).count();
    if pos == 0 || pos == y.len() {
        log::warn!("training data has a single class; the forest is constant");
    }
    let mtry = params
        .max_features
        .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
        .clamp(1, d);
    let n = x.len();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(params.seed, t);
            let mut rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            rows.sort_unstable();
            let mut b = Builder {
                x: &x,
                y: &y,
                d,
                mtry,
                min_leaf: params.min_leaf.max(1),
                max_depth: params.max_depth.unwrap_or(usize::MAX),
                root_n: n as f64,
                nodes: Vec::new(),
                scratch: Vec::with_capacity(n),
            };
            b.grow(&mut rng, rows);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(ForestModel {
        version: MODEL_VERSION,
        params: params.clone(),
        feature_names: train.feature_names.clone(),
        trees,
    })
}

impl ForestModel {
    /// Mean positive fraction of the leaves `x` falls into. `x` is in the
    /// model's feature order.
    pub fn predict_values(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.leaf_fraction(x)).sum();
        (sum / self.trees.len() as f64).clamp(0.0, 1.0)
    }

    /// Looks features up by name, so column order does not matter.
    pub fn predict_proba(&self, names: &[String], values: &[f64]) -> Result<f64> {
        let cols = self.columns(names)?;
        let x: Vec<f64> = cols.iter().map(|&c| values[c]).collect();
        Ok(self.predict_values(&x))
    }

    pub fn classify(&self, names: &[String], values: &[f64], threshold: f64) -> Result<bool> {
        Ok(self.predict_proba(names, values)? > threshold)
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        let cols = self.columns(&ds.feature_names)?;
        Ok(ds
            .rows
            .par_iter()
            .map(|r| {
                let x: Vec<f64> = cols.iter().map(|&c| r.values[c]).collect();
                self.predict_values(&x)
            })
            .collect())
    }

    fn columns(&self, names: &[String]) -> Result<Vec<usize>> {
        self.feature_names
            .iter()
            .map(|f| {
                names.iter().position(|n| n == f).ok_or_else(|| Error::Schema {
                    path: "<row>".into(),
                    field: f.clone(),
                    reason: "feature required by the model is missing".into(),
                })
            })
            .collect()
    }

    /// Mean decrease in impurity per feature, normalized to sum to one.
    pub fn feature_importance(&self) -> BTreeMap<String, f64> {
        let v = self.importance_vector();
        self.feature_names.iter().cloned().zip(v).collect()
    }

    /// Importances in model feature order.
    pub fn importance_vector(&self) -> Vec<f64> {
        let d = self.feature_names.len();
        let mut acc = vec![0.0; d];
        for t in &self.trees {
            for node in &t.nodes {
                if let Node::Split { feature, gain, .. } = node {
                    acc[*feature] += gain;
                }
            }
        }
        let total: f64 = acc.iter().sum();
        if total > 0.0 {
            acc.iter_mut().for_each(|a| *a /= total);
        } else {
            acc.iter_mut().for_each(|a| *a = 1.0 / d as f64);
        }
        acc
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: ForestModel = serde_json::from_str(text)?;
        if m.version != MODEL_VERSION {
            return Err(Error::InvalidData(format!(
                "model version {} is not supported (expected {MODEL_VERSION})",
                m.version
            )));
        }
        for t in &m.trees {
            for node in &t.nodes {
                match node {
                    Node::Split { feature, left, right, .. } => {
                        if *feature >= m.feature_names.len() || *left >= t.nodes.len() || *right >= t.nodes.len() {
                            return Err(Error::InvalidData("model references a missing node or feature".into()));
                        }
                    }
                    Node::Leaf { counts } => {
                        if counts[0] + counts[1] == 0 {
                            return Err(Error::InvalidData("model has an empty leaf".into()));
                        }
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}
