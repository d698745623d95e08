//! JSON run configuration. Command-line flags take precedence over it.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{usage, CliResult};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub repo: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub fixtures: Option<PathBuf>,
    /// `owner/name` on the forge.
    pub fetch: Option<String>,
    pub labels: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub project: Option<String>,
    pub features: Option<Vec<String>>,
    pub scheme: Option<String>,
    pub model: Option<String>,
    pub seed: Option<u64>,
    pub budget: Option<f64>,
    pub out: Option<PathBuf>,
    pub censor: Option<bool>,
    pub scale_on: Option<String>,
    pub folds: Option<usize>,
    pub repeats: Option<usize>,
    pub trees: Option<usize>,
    pub jobs: Option<usize>,
    pub skip_merges: Option<bool>,
    pub detect_renames: Option<bool>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read --config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| usage(format!("invalid --config {}: {e}", path.display())))
    }
}

/// Flag value if given, else the config value.
pub fn pick<T>(flag: Option<T>, config: &Option<T>) -> Option<T>
where
    T: Clone,
{
    flag.or_else(|| config.clone())
}

pub fn parse_with<T: std::str::FromStr<Err = String>>(flag: &str, value: &str) -> CliResult<T> {
    value.parse().map_err(|e| usage(format!("{flag}: {e}")))
}
