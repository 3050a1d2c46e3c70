//! Synthetic tasks drawn from the noisy-oracle regression model.
//!
//! A hidden label embedding `z = X·w + ε` is observed through `K` oracles
//! `z_k = z + ν_k`, with `ε ~ N(0, σ₀²)` and `ν_k ~ N(0, σ_k²)` entry-wise.
//! Everything is driven by a seeded ChaCha8 stream so that a task is fully
//! determined by its parameters and seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::labelspace::{normalize_flabels, stack_flabels, FLabelStack, FeatureMatrix, LabelError};
use crate::linalg::Matrix;

/// Name of the pseudo-random generator, recorded in reports.
pub const GENERATOR_NAME: &str = "ChaCha8Rng";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid task parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Label(#[from] LabelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskParams {
    pub n: usize,
    pub d: usize,
    pub l: usize,
    pub k: usize,
    /// `K + 1` noise levels: regression noise first, then one per oracle.
    pub sigma: Vec<f64>,
    /// ℓ2-normalize every label row, mimicking real F-Labels.
    pub normalize: bool,
}

impl TaskParams {
    pub fn new(n: usize, d: usize, l: usize, sigma: Vec<f64>) -> Self {
        Self {
            n,
            d,
            l,
            k: sigma.len().saturating_sub(1),
            sigma,
            normalize: false,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidParams(m));
        if self.n == 0 || self.d == 0 || self.l == 0 || self.k == 0 {
            return bad(format!(
                "counts must be at least 1 (n={}, d={}, l={}, k={})",
                self.n, self.d, self.l, self.k
            ));
        }
        if self.sigma.len() != self.k + 1 {
            return bad(format!(
                "expected {} noise levels, got {}",
                self.k + 1,
                self.sigma.len()
            ));
        }
        if self.sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("noise levels must be finite and non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub x: FeatureMatrix,
    pub z: FLabelStack,
    pub true_w: Matrix,
    pub sigma: Vec<f64>,
    pub seed: u64,
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Matrix::from_parts(rows, cols, data)
}

pub fn generate_task(params: &TaskParams, seed: u64) -> Result<SyntheticTask, SynthError> {
    params.validate()?;
    let TaskParams { n, d, l, k, .. } = *params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let x = normal_matrix(&mut rng, n, d, 1.0);
    let true_w = normal_matrix(&mut rng, d, l, 1.0 / (d as f64).sqrt());
    let mut hidden = x.matmul(&true_w).expect("X is N×D and w is D×L");
    let eps = normal_matrix(&mut rng, n, l, params.sigma[0]);
    hidden.axpy(1.0, &eps).expect("same N×L shape");

    let mut slices = Vec::with_capacity(k);
    for sigma_k in &params.sigma[1..] {
        let mut slice = hidden.clone();
        slice
            .axpy(1.0, &normal_matrix(&mut rng, n, l, *sigma_k))
            .expect("same N×L shape");
        if params.normalize {
            slice = normalize_flabels(&slice)?;
        }
        slices.push(slice);
    }

    Ok(SyntheticTask {
        x: FeatureMatrix::new(x),
        z: stack_flabels(slices)?,
        true_w,
        sigma: params.sigma.clone(),
        seed,
    })
}

/// One fake pre-trained model of a [`ModelSuite`].
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteModel {
    pub model_id: String,
    pub features: FeatureMatrix,
    /// Synthetic ground truth, equal to the model's quality.
    pub g_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSuite {
    pub task: SyntheticTask,
    pub models: Vec<SuiteModel>,
}

/// Builds one model per quality level over a shared task. Model `i` sees
/// `q_i·X + (1 − q_i)·E_i` with `E_i` independent standard normal noise.
pub fn generate_model_suite(
    quality: &[f64],
    base: &TaskParams,
    seed: u64,
) -> Result<ModelSuite, SynthError> {
    if let Some(q) = quality.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(SynthError::InvalidParams(format!(
            "quality {q} outside [0, 1]"
        )));
    }
    let task = generate_task(base, seed)?;
    let signal = task.x.matrix();
    let models = quality
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            let noise = normal_matrix(&mut rng, base.n, base.d, 1.0 - q);
            let mut features = signal.scale(q);
            features.axpy(1.0, &noise).expect("same N×D shape");
            SuiteModel {
                model_id: format!("model-{i:03}"),
                features: FeatureMatrix::new(features),
                g_score: q,
            }
        })
        .collect();
    Ok(ModelSuite { task, models })
}
