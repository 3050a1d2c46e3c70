//! Task manifests and the JSON reports produced from them.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use emms_core::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::error::IoError;

pub const SCHEMA_VERSION: &str = "1";

/// A ranking task: candidate model features, the shared label embeddings
/// (file order defines the oracle index), and optional ground truth.
/// Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub task_name: String,
    pub models: Vec<ModelEntry>,
    #[serde(default)]
    pub flabels: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<PathBuf>,
    /// Selects one-hot labels instead of F-Labels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one_hot: Option<OneHotSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub id: String,
    pub features: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneHotSpec {
    pub labels: PathBuf,
    pub classes: usize,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, IoError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| IoError::Json {
            file: path.display().to_string(),
            source: e,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IoError> {
        write_json(path.as_ref(), self)
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| IoError::Json {
        file: path.display().to_string(),
        source: e,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| IoError::io(path, e))
}

/// One scored model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub model_id: String,
    /// Transferability `T = −s`; higher is better.
    pub t_score: f64,
    pub iters: usize,
    pub converged: bool,
    /// Fitted oracle weights.
    pub oracle_weights: Vec<f64>,
    pub wall_clock_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub schema_version: String,
    pub task_name: String,
    /// Sorted by `t_score` descending, ties by model id.
    pub entries: Vec<ReportEntry>,
    /// Present when ground truth was supplied for at least two models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metric_failures: BTreeMap<String, String>,
    pub config: SolverConfig,
    pub warnings: Vec<String>,
}

impl RankingReport {
    pub fn ranking(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.model_id.as_str()).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IoError> {
        write_json(path.as_ref(), self)
    }

    /// Copy with every wall-clock field zeroed, for determinism checks.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        r.entries.iter_mut().for_each(|e| e.wall_clock_ms = 0.0);
        r
    }
}
