//! Config file: one JSON object whose keys are the long flag names.

use std::path::{Path, PathBuf};

use mi_cmaes::SearchSpace;
use serde::Deserialize;

use crate::Failure;

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub function: Option<String>,
    pub functions: Option<Vec<String>>,
    pub dim: Option<usize>,
    pub dims: Option<Vec<usize>>,
    pub method: Option<String>,
    pub methods: Option<Vec<String>>,
    pub alpha: Option<AlphaValue>,
    pub seed: Option<u64>,
    pub seed_base: Option<u64>,
    pub max_evals: Option<u64>,
    pub lambda: Option<usize>,
    pub trials: Option<usize>,
    pub jobs: Option<usize>,
    pub m_grid: Option<Vec<f64>>,
    pub n_grid: Option<Vec<f64>>,
    pub log: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Per-variable domains replacing the benchmark default.
    pub space: Option<SearchSpace>,
}

/// `"auto"` or a number.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum AlphaValue {
    Number(f64),
    Text(String),
}

impl AlphaValue {
    pub fn to_arg(&self) -> String {
        match self {
            Self::Number(v) => v.to_string(),
            Self::Text(s) => s.clone(),
        }
    }
}

pub fn load(path: Option<&Path>) -> Result<FileConfig, Failure> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))
}
