//! Change-level feature extraction and evaluation for just-in-time (JIT)
//! defect prediction.
//!
//! The pipeline mines a git repository into [`miner::CommitRecord`]s, joins
//! pull-request metadata from [`forge`], parses changed sources into generic
//! syntax trees ([`ast`]) and diffs them ([`treediff`]), then computes 51
//! change features per commit ([`features`]). Datasets are preprocessed and
//! split in [`dataset`], models live in [`learner`], and [`eval`] holds the
//! standard and effort-aware metrics plus the statistical tests used to
//! compare feature sets. [`pipeline`] strings the stages together and
//! [`fixture`] builds the bundled demo repository.

pub mod ast;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod fixture;
pub mod forge;
pub mod learner;
pub mod miner;
pub mod pipeline;
pub mod treediff;

pub use error::{Error, Result};

/// Seconds per hour.
pub const HOUR: f64 = 3600.0;
/// Seconds per day.
pub const DAY: f64 = 86_400.0;
/// Julian year in seconds.
pub const YEAR: f64 = 31_557_600.0;
