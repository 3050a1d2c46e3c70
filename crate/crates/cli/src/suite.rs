//! Writes a synthetic model suite to disk as an ordinary task directory.

use std::fs;
use std::path::{Path, PathBuf};

use emms_core::synth::GENERATOR_NAME;
use emms_core::ModelSuite;
use serde::Serialize;

use crate::error::IoError;
use crate::manifest::{write_json, Manifest, ModelEntry};
use crate::npy::write_npy;
use crate::tables::format_score_table;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PROVENANCE_FILE: &str = "synth.json";

/// How a suite was generated, so it can be regenerated bit for bit.
#[derive(Debug, Serialize)]
struct Provenance<'a> {
    generator: &'a str,
    seed: u64,
    n: usize,
    d: usize,
    l: usize,
    sigma: &'a [f64],
    quality: Vec<f64>,
}

/// Layout: `features/<id>.npy`, `flabels/oracle-<k>.npy`, `ground_truth.csv`
/// `synth.json` (generator and parameters) and `manifest.json`. Returns the
/// manifest path.
pub fn write_suite(
    dir: impl AsRef<Path>,
    suite: &ModelSuite,
    task_name: &str,
) -> Result<PathBuf, IoError> {
    let dir = dir.as_ref();
    for sub in ["features", "flabels"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(|e| IoError::io(&p, e))?;
    }

    let mut flabels = Vec::new();
    for (k, slice) in suite.task.z.slices().iter().enumerate() {
        let rel = PathBuf::from(format!("flabels/oracle-{k}.npy"));
        write_npy(dir.join(&rel), slice)?;
        flabels.push(rel);
    }

    let mut models = Vec::new();
    let mut scores = Vec::new();
    for m in &suite.models {
        let rel = PathBuf::from(format!("features/{}.npy", m.model_id));
        write_npy(dir.join(&rel), m.features.matrix())?;
        models.push(ModelEntry {
            id: m.model_id.clone(),
            features: rel,
        });
        scores.push((m.model_id.clone(), m.g_score));
    }

    let gt = dir.join("ground_truth.csv");
    fs::write(&gt, format_score_table(&scores)).map_err(|e| IoError::io(&gt, e))?;

    let task = &suite.task;
    let provenance = Provenance {
        generator: GENERATOR_NAME,
        seed: task.seed,
        n: task.x.n(),
        d: task.x.d(),
        l: task.z.l(),
        sigma: &task.sigma,
        quality: suite.models.iter().map(|m| m.g_score).collect(),
    };
    write_json(&dir.join(PROVENANCE_FILE), &provenance)?;

    let manifest = Manifest {
        task_name: task_name.to_string(),
        models,
        flabels,
        ground_truth: Some(PathBuf::from("ground_truth.csv")),
        one_hot: None,
    };
    let path = dir.join(MANIFEST_FILE);
    manifest.save(&path)?;
    Ok(path)
}
