//! Euclidean projection onto the probability simplex.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack under which an input that already lies on the simplex is returned
/// untouched, which makes projection exactly idempotent.
const FEASIBLE_SLACK: f64 = 1e-12;

/// Tolerance on `Σ t = 1` accepted by [`SimplexVector::new`].
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimplexError {
    #[error("cannot project an empty vector")]
    EmptyInput,
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("not a point of the simplex: {0}")]
    Infeasible(String),
}

/// A point of the probability simplex: non-negative entries summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    /// Validates an explicit point of the simplex.
    pub fn new(values: Vec<f64>) -> Result<Self, SimplexError> {
        if values.is_empty() {
            return Err(SimplexError::EmptyInput);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SimplexError::NonFinite(i));
        }
        if let Some(i) = values.iter().position(|&v| v < 0.0) {
            return Err(SimplexError::Infeasible(format!(
                "entry {i} is negative ({})",
                values[i]
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(SimplexError::Infeasible(format!("entries sum to {sum}")));
        }
        Ok(Self(values))
    }

    /// The barycenter `(1/K, …, 1/K)`.
    pub fn uniform(k: usize) -> Result<Self, SimplexError> {
        if k == 0 {
            return Err(SimplexError::EmptyInput);
        }
        Ok(Self(vec![1.0 / k as f64; k]))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Index and value of the largest weight.
    pub fn argmax(&self) -> (usize, f64) {
        self.0
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            })
    }
}

impl std::ops::Index<usize> for SimplexVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// `argmin_{x ∈ Δ} ‖x − v‖₂` by the sort-and-threshold closed form.
pub fn project_simplex(v: &[f64]) -> Result<SimplexVector, SimplexError> {
    if v.is_empty() {
        return Err(SimplexError::EmptyInput);
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(SimplexError::NonFinite(i));
    }
    if v.len() == 1 {
        return Ok(SimplexVector(vec![1.0]));
    }
    if v.iter().all(|&x| x >= 0.0) && (v.iter().sum::<f64>() - 1.0).abs() <= FEASIBLE_SLACK {
        return Ok(SimplexVector(v.to_vec()));
    }

    let mut sorted = v.to_vec();
    // Stable descending sort; ties keep input order.
    sorted.sort_by(|a, b| b.total_cmp(a));

    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let rho = (i + 1) as f64;
        let candidate = (cumulative - 1.0) / rho;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    Ok(SimplexVector(
        v.iter().map(|&x| (x - theta).max(0.0)).collect(),
    ))
}

/// Sparsemax: the simplex projection under the name used by the fast solver.
#[inline]
pub fn sparsemax(v: &[f64]) -> Result<SimplexVector, SimplexError> {
    project_simplex(v)
}
