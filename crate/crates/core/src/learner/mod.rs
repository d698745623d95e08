//! Random forest classifier and least-squares baselines.

mod forest;
mod linear;

pub use forest::{train_forest, ForestModel, ForestParams, Node, Tree, MODEL_VERSION};
pub use linear::{density_targets, ols, train_linear, LinearModel, LinearTarget, RIDGE};
