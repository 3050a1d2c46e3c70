//! Rank-quality measures between transferability scores and ground truth.
//!
//! Sign convention: `sgn(x)` is `−1` for `x < 0` and `+1` otherwise, so a
//! tie on either side counts as agreement. Weighted variants use hyperbolic
//! additive weights: the model with zero-based rank `r` by descending ground
//! truth gets weight `1/(r+1)`, and a pair gets the sum of its two weights.
//! Ground-truth ties are ranked in input order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("need at least 2 models, got {0}")]
    TooFewModels(usize),
    #[error("zero variance in {0} scores")]
    ZeroVariance(&'static str),
    #[error("k = {k} outside 1..={m}")]
    BadK { k: usize, m: usize },
    #[error("duplicate model id '{0}'")]
    DuplicateModel(String),
    #[error("non-finite score for model '{0}'")]
    NonFinite(String),
    #[error("best ground-truth score {0} is not positive")]
    NonPositiveBest(f64),
}

/// Transferability and ground-truth score of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorePair {
    pub model_id: String,
    pub t_score: f64,
    pub g_score: f64,
}

impl ScorePair {
    pub fn new(model_id: impl Into<String>, t_score: f64, g_score: f64) -> Self {
        Self {
            model_id: model_id.into(),
            t_score,
            g_score,
        }
    }
}

/// Builds pairs named `m0, m1, …` from parallel score slices.
pub fn pairs_from(t_scores: &[f64], g_scores: &[f64]) -> Vec<ScorePair> {
    t_scores
        .iter()
        .zip(g_scores)
        .enumerate()
        .map(|(i, (&t, &g))| ScorePair::new(format!("m{i}"), t, g))
        .collect()
}

fn validate(pairs: &[ScorePair]) -> Result<(), MetricError> {
    if pairs.len() < 2 {
        return Err(MetricError::TooFewModels(pairs.len()));
    }
    let mut seen = HashSet::with_capacity(pairs.len());
    for p in pairs {
        if !seen.insert(p.model_id.as_str()) {
            return Err(MetricError::DuplicateModel(p.model_id.clone()));
        }
        if !(p.t_score.is_finite() && p.g_score.is_finite()) {
            return Err(MetricError::NonFinite(p.model_id.clone()));
        }
    }
    Ok(())
}

#[inline]
fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Hyperbolic weight `1/(r+1)` of each model, `r` its rank by descending
/// ground truth.
pub fn rank_weights(pairs: &[ScorePair]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| pairs[b].g_score.total_cmp(&pairs[a].g_score));
    let mut weights = vec![0.0; pairs.len()];
    for (rank, &i) in order.iter().enumerate() {
        weights[i] = 1.0 / (rank + 1) as f64;
    }
    weights
}

pub fn kendall_tau(pairs: &[ScorePair]) -> Result<f64, MetricError> {
    validate(pairs)?;
    let m = pairs.len();
    let mut sum = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            sum +=
                sgn(pairs[i].g_score - pairs[j].g_score) * sgn(pairs[i].t_score - pairs[j].t_score);
        }
    }
    Ok(2.0 * sum / (m * (m - 1)) as f64)
}

pub fn weighted_kendall_tau(pairs: &[ScorePair]) -> Result<f64, MetricError> {
    validate(pairs)?;
    let weights = rank_weights(pairs);
    let m = pairs.len();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..m {
        for j in (i + 1)..m {
            let w = weights[i] + weights[j];
            num += w
                * sgn(pairs[i].g_score - pairs[j].g_score)
                * sgn(pairs[i].t_score - pairs[j].t_score);
            den += w;
        }
    }
    Ok(num / den)
}

fn weighted_correlation(pairs: &[ScorePair], weights: &[f64]) -> Result<f64, MetricError> {
    let total: f64 = weights.iter().sum();
    let mean = |f: fn(&ScorePair) -> f64| -> f64 {
        pairs
            .iter()
            .zip(weights)
            .map(|(p, w)| w * f(p))
            .sum::<f64>()
            / total
    };
    let mt = mean(|p| p.t_score);
    let mg = mean(|p| p.g_score);
    let (mut cov, mut vt, mut vg) = (0.0, 0.0, 0.0);
    for (p, w) in pairs.iter().zip(weights) {
        let dt = p.t_score - mt;
        let dg = p.g_score - mg;
        cov += w * dt * dg;
        vt += w * dt * dt;
        vg += w * dg * dg;
    }
    if vt == 0.0 {
        return Err(MetricError::ZeroVariance("transferability"));
    }
    if vg == 0.0 {
        return Err(MetricError::ZeroVariance("ground-truth"));
    }
    Ok((cov / (vt.sqrt() * vg.sqrt())).clamp(-1.0, 1.0))
}

/// Product-moment correlation.
pub fn pearson(pairs: &[ScorePair]) -> Result<f64, MetricError> {
    validate(pairs)?;
    weighted_correlation(pairs, &vec![1.0; pairs.len()])
}

/// Product-moment correlation under the hyperbolic rank weights.
pub fn weighted_pearson(pairs: &[ScorePair]) -> Result<f64, MetricError> {
    validate(pairs)?;
    weighted_correlation(pairs, &rank_weights(pairs))
}

/// Indices sorted by descending transferability, ties by model id.
fn predicted_order(pairs: &[ScorePair]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(
        |&a, &b| match pairs[b].t_score.total_cmp(&pairs[a].t_score) {
            Ordering::Equal => pairs[a].model_id.cmp(&pairs[b].model_id),
            other => other,
        },
    );
    order
}

/// Best ground truth among the top-`k` predicted models over the best overall.
pub fn rel_at_k(pairs: &[ScorePair], k: usize) -> Result<f64, MetricError> {
    validate(pairs)?;
    let m = pairs.len();
    if k < 1 || k > m {
        return Err(MetricError::BadK { k, m });
    }
    let best = pairs
        .iter()
        .map(|p| p.g_score)
        .fold(f64::NEG_INFINITY, f64::max);
    if best <= 0.0 {
        return Err(MetricError::NonPositiveBest(best));
    }
    let top = predicted_order(pairs)
        .into_iter()
        .take(k)
        .map(|i| pairs[i].g_score)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(top / best)
}

/// All metrics for a report. Individual metric failures (e.g. zero
/// variance) are collected rather than aborting the summary.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub values: BTreeMap<String, f64>,
    pub failures: BTreeMap<String, String>,
}

pub fn summarize(pairs: &[ScorePair]) -> Result<MetricSummary, MetricError> {
    validate(pairs)?;
    let mut summary = MetricSummary::default();
    let mut record = |name: &str, result: Result<f64, MetricError>| match result {
        Ok(v) => {
            summary.values.insert(name.to_string(), v);
        }
        Err(e) => {
            summary.failures.insert(name.to_string(), e.to_string());
        }
    };
    record("kendall_tau", kendall_tau(pairs));
    record("weighted_kendall_tau", weighted_kendall_tau(pairs));
    record("pearson", pearson(pairs));
    record("weighted_pearson", weighted_pearson(pairs));
    record("rel@1", rel_at_k(pairs, 1));
    if pairs.len() >= 3 {
        record("rel@3", rel_at_k(pairs, 3));
    }
    Ok(summary)
}
