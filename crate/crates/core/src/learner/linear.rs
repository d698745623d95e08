use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::{Error, Result};

/// Ridge term added to the normal equations for rank safety.
pub const RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearTarget {
    /// The 0/1 label.
    Class,
    /// Label divided by (churn + 1).
    Density,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub target: LinearTarget,
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        if ds.feature_names != self.feature_names {
            return Err(Error::InvalidData("dataset columns differ from the model's".into()));
        }
        Ok(ds.rows.iter().map(|r| self.predict(&r.values)).collect())
    }
}

pub fn density_targets(labels: &[bool], churn: &[f64]) -> Vec<f64> {
    labels
        .iter()
        .zip(churn)
        .map(|(l, c)| f64::from(u8::from(*l)) / (c + 1.0))
        .collect()
}

/// Least squares with an intercept. Columns are centered and scaled to unit
/// variance before solving the damped normal equations; constant columns get
/// weight 0.
pub fn ols(x: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::InvalidData(format!(
            "least squares needs at least 2 rows with targets, got {n} rows and {} targets",
            y.len()
        )));
    }
    let d = x[0].len();
    let nf = n as f64;
    let mean: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / nf).collect();
    let scale: Vec<f64> = (0..d)
        .map(|j| {
            let var = x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / nf;
            if var.sqrt() > 1e-12 { var.sqrt() } else { 0.0 }
        })
        .collect();
    let y_mean = y.iter().sum::<f64>() / nf;
    let z = |r: &[f64], j: usize| if scale[j] > 0.0 { (r[j] - mean[j]) / scale[j] } else { 0.0 };

    let zm = DMatrix::from_fn(n, d, |i, j| z(&x[i], j));
    let yc = DVector::from_iterator(n, y.iter().map(|t| t - y_mean));
    let mut a = zm.transpose() * &zm;
    for i in 0..d {
        a[(i, i)] += RIDGE;
    }
    let beta = a
        .cholesky()
        .ok_or_else(|| Error::InvalidData("normal equations are not positive definite".into()))?
        .solve(&(zm.transpose() * yc));
    let weights: Vec<f64> = (0..d)
        .map(|j| if scale[j] > 0.0 { beta[j] / scale[j] } else { 0.0 })
        .collect();
    let intercept = y_mean - weights.iter().zip(&mean).map(|(w, m)| w * m).sum::<f64>();
    Ok((weights, intercept))
}

/// Fits a linear model. `churn` holds raw LA + LD per row and is read only
/// for the density target.
pub fn train_linear(train: &Dataset, target: LinearTarget, churn: &[f64]) -> Result<LinearModel> {
    let labels = train.labels();
    let y: Vec<f64> = match target {
        LinearTarget::Class => labels.iter().map(|l| f64::from(u8::from(*l))).collect(),
        LinearTarget::Density => {
            if churn.len() != labels.len() {
                return Err(Error::InvalidData("churn and rows differ in length".into()));
            }
            density_targets(&labels, churn)
        }
    };
    let (weights, intercept) = ols(&train.matrix(), &y)?;
    Ok(LinearModel {
        feature_names: train.feature_names.clone(),
        weights,
        intercept,
        target,
    })
}
