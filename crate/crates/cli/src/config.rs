use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use synthbt_core::{ProcessSpec, StrategyKind};
use synthbt_rgan::GanConfig;

use crate::error::{CliError, Result};

/// Declarative experiment description read from a TOML file. Every field is
/// optional; command-line flags override what is set here.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub process: Option<ProcessSpec>,
    pub strategy: Option<StrategyKind>,
    pub gan: Option<GanConfig>,
    pub data: Option<DataSection>,
    pub pipeline: Option<PipelineSection>,
}

/// Training data for `gan train`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Path-set CSV; when absent, paths are simulated from `process`.
    pub paths: Option<PathBuf>,
    pub n_paths: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    pub runs: Option<usize>,
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
    pub n_synthetic: Option<usize>,
    pub n_eval: Option<usize>,
    pub threshold: Option<f64>,
    pub bins: Option<usize>,
    pub eval_paths: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load_optional(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}
