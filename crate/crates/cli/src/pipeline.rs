//! End-to-end ranking of a model zoo against shared label embeddings.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use emms_core::metrics::{summarize, ScorePair};
use emms_core::{
    normalize_flabels, one_hot_stack, solve, stack_flabels, FLabelStack, FeatureMatrix, LabelError,
    Matrix, SolverConfig,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{IoError, PipelineError};
use crate::manifest::{Manifest, RankingReport, ReportEntry, SCHEMA_VERSION};
use crate::npy::read_npy;
use crate::tables::{read_csv_matrix, read_labels, read_score_table};

/// Environment variable capping model-level parallelism (0 = automatic).
pub const THREADS_ENV: &str = "EMMS_THREADS";

pub fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

/// Reads a matrix from `.npy`, or from CSV for any other extension.
pub fn read_matrix(path: &Path) -> Result<Matrix, IoError> {
    let is_npy = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("npy"));
    if is_npy {
        read_npy(path)
    } else {
        read_csv_matrix(path)
    }
}

/// Where a model's features come from.
#[derive(Debug, Clone)]
pub enum FeatureSource {
    File(PathBuf),
    Memory(FeatureMatrix),
}

#[derive(Debug, Clone)]
pub struct ModelInput {
    pub id: String,
    pub source: FeatureSource,
}

impl ModelInput {
    pub fn in_memory(id: impl Into<String>, features: FeatureMatrix) -> Self {
        Self {
            id: id.into(),
            source: FeatureSource::Memory(features),
        }
    }

    fn describe(&self) -> String {
        match &self.source {
            FeatureSource::File(p) => p.display().to_string(),
            FeatureSource::Memory(_) => format!("<features of {}>", self.id),
        }
    }

    pub(crate) fn load(&self) -> Result<FeatureMatrix, IoError> {
        match &self.source {
            FeatureSource::File(p) => read_matrix(p).map(FeatureMatrix::new),
            FeatureSource::Memory(f) => Ok(f.clone()),
        }
    }
}

/// Label embeddings plus a description of their origin for error messages.
#[derive(Debug, Clone)]
pub struct LabelInput {
    pub stack: FLabelStack,
    pub origin: String,
}

impl LabelInput {
    pub fn in_memory(stack: FLabelStack) -> Self {
        Self {
            stack,
            origin: "<label embeddings>".into(),
        }
    }
}

/// Loads, ℓ2-normalizes and stacks F-Label files in order.
pub fn load_flabels(paths: &[PathBuf]) -> Result<LabelInput, PipelineError> {
    let files = paths
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(", ");
    let mut slices = Vec::with_capacity(paths.len());
    for path in paths {
        let raw = read_matrix(path)?;
        let normalized = normalize_flabels(&raw).map_err(|source| PipelineError::Labels {
            files: path.display().to_string(),
            source,
        })?;
        slices.push(normalized);
    }
    let stack = stack_flabels(slices).map_err(|source| {
        let files = match &source {
            LabelError::ShapeMismatch { index, .. } => {
                format!("{} vs {}", paths[0].display(), paths[*index].display())
            }
            _ => files.clone(),
        };
        PipelineError::Labels { files, source }
    })?;
    Ok(LabelInput {
        stack,
        origin: paths
            .first()
            .map(|p| p.display().to_string())
            .unwrap_or_default(),
    })
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Everything a manifest points at, with paths resolved.
pub struct ResolvedTask {
    pub task_name: String,
    pub models: Vec<ModelInput>,
    pub labels: LabelInput,
    pub ground_truth: Option<Vec<(String, f64)>>,
    pub warnings: Vec<String>,
}

pub fn resolve_manifest(
    manifest: &Manifest,
    base_dir: &Path,
) -> Result<ResolvedTask, PipelineError> {
    if manifest.models.is_empty() {
        return Err(PipelineError::Manifest("no models listed".into()));
    }
    let mut warnings = Vec::new();
    let labels = match &manifest.one_hot {
        Some(spec) => {
            if !manifest.flabels.is_empty() {
                warnings.push("one_hot given: flabels ignored".to_string());
            }
            let path = resolve(base_dir, &spec.labels);
            let ids = read_labels(&path)?;
            let stack =
                one_hot_stack(&ids, spec.classes).map_err(|source| PipelineError::Labels {
                    files: path.display().to_string(),
                    source,
                })?;
            LabelInput {
                stack,
                origin: path.display().to_string(),
            }
        }
        None => {
            if manifest.flabels.is_empty() {
                return Err(PipelineError::Manifest(
                    "need at least one flabels file or a one_hot block".into(),
                ));
            }
            let paths: Vec<PathBuf> = manifest
                .flabels
                .iter()
                .map(|p| resolve(base_dir, p))
                .collect();
            load_flabels(&paths)?
        }
    };
    let ground_truth = match &manifest.ground_truth {
        Some(p) => Some(read_score_table(resolve(base_dir, p))?),
        None => None,
    };
    let models = manifest
        .models
        .iter()
        .map(|m| ModelInput {
            id: m.id.clone(),
            source: FeatureSource::File(resolve(base_dir, &m.features)),
        })
        .collect();
    Ok(ResolvedTask {
        task_name: manifest.task_name.clone(),
        models,
        labels,
        ground_truth,
        warnings,
    })
}

pub(crate) fn with_pool<T: Send>(
    threads: usize,
    job: impl FnOnce() -> T + Send,
) -> Result<T, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PipelineError::ThreadPool(e.to_string()))?;
    Ok(pool.install(job))
}

pub(crate) fn check_unique(models: &[ModelInput]) -> Result<(), PipelineError> {
    let mut seen = HashSet::new();
    for m in models {
        if !seen.insert(m.id.as_str()) {
            return Err(PipelineError::DuplicateModel(m.id.clone()));
        }
    }
    Ok(())
}

pub(crate) fn load_checked(
    model: &ModelInput,
    labels: &LabelInput,
) -> Result<FeatureMatrix, PipelineError> {
    let features = model.load()?;
    if features.n() != labels.stack.n() {
        return Err(PipelineError::ShapeMismatch {
            features: model.describe(),
            feature_rows: features.n(),
            labels: labels.origin.clone(),
            label_rows: labels.stack.n(),
        });
    }
    Ok(features)
}

/// Reads a manifest and ranks its models.
pub fn run_ranking(
    manifest_path: impl AsRef<Path>,
    cfg: &SolverConfig,
    threads: usize,
) -> Result<RankingReport, PipelineError> {
    let path = manifest_path.as_ref();
    let manifest = Manifest::load(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let task = resolve_manifest(&manifest, base)?;
    rank_task(task, cfg, threads)
}

pub fn rank_task(
    task: ResolvedTask,
    cfg: &SolverConfig,
    threads: usize,
) -> Result<RankingReport, PipelineError> {
    let mut report = rank_models(
        &task.task_name,
        &task.models,
        &task.labels,
        task.ground_truth.as_deref(),
        cfg,
        threads,
    )?;
    let mut warnings = task.warnings;
    warnings.append(&mut report.warnings);
    report.warnings = warnings;
    Ok(report)
}

/// Scores every model, sorts by transferability and, with ground truth,
/// computes the rank metrics. Any model failure aborts the whole ranking.
pub fn rank_models(
    task_name: &str,
    models: &[ModelInput],
    labels: &LabelInput,
    ground_truth: Option<&[(String, f64)]>,
    cfg: &SolverConfig,
    threads: usize,
) -> Result<RankingReport, PipelineError> {
    cfg.validate().map_err(|source| PipelineError::Model {
        model: "<config>".into(),
        source,
    })?;
    check_unique(models)?;

    let scored: Vec<Result<(ReportEntry, Vec<String>), PipelineError>> =
        with_pool(threads, || {
            models
                .par_iter()
                .map(|model| {
                    let features = load_checked(model, labels)?;
                    let start = Instant::now();
                    let solution = solve(&features, &labels.stack, cfg).map_err(|source| {
                        PipelineError::Model {
                            model: model.id.clone(),
                            source,
                        }
                    })?;
                    let elapsed = start.elapsed().as_secs_f64() * 1e3;
                    log::info!(
                        "{}: T = {:.6e} ({} iters, {:.1} ms)",
                        model.id,
                        -solution.score,
                        solution.iters,
                        elapsed
                    );
                    let warnings = solution
                        .warnings
                        .iter()
                        .map(|w| format!("{}: {w}", model.id))
                        .collect();
                    Ok((
                        ReportEntry {
                            model_id: model.id.clone(),
                            t_score: -solution.score,
                            iters: solution.iters,
                            converged: solution.converged,
                            oracle_weights: solution.t.into_vec(),
                            wall_clock_ms: elapsed,
                        },
                        warnings,
                    ))
                })
                .collect()
        })?;

    let mut entries = Vec::with_capacity(models.len());
    let mut warnings = Vec::new();
    for result in scored {
        let (entry, mut w) = result?;
        entries.push(entry);
        warnings.append(&mut w);
    }
    entries.sort_by(|a, b| a.model_id.cmp(&b.model_id));
    entries.sort_by(|a, b| b.t_score.total_cmp(&a.t_score));

    let mut report = RankingReport {
        schema_version: SCHEMA_VERSION.to_string(),
        task_name: task_name.to_string(),
        entries,
        metrics: None,
        metric_failures: Default::default(),
        config: cfg.clone(),
        warnings,
    };
    if let Some(gt) = ground_truth {
        attach_metrics(&mut report, gt)?;
    }
    Ok(report)
}

/// Rank metrics of transferability scores against ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metric_failures: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

/// Matches `model,score` rows of T against ground truth. Every scored model
/// needs a ground-truth entry; with fewer than two models the metrics are
/// skipped with a warning.
pub fn evaluate_scores(
    t_scores: &[(String, f64)],
    ground_truth: &[(String, f64)],
) -> Result<MetricsReport, PipelineError> {
    let lookup: HashMap<&str, f64> = ground_truth
        .iter()
        .map(|(id, g)| (id.as_str(), *g))
        .collect();
    let pairs = t_scores
        .iter()
        .map(|(id, t)| {
            lookup
                .get(id.as_str())
                .map(|&g| ScorePair::new(id.clone(), *t, g))
                .ok_or_else(|| PipelineError::MissingGroundTruth(id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = MetricsReport {
        schema_version: SCHEMA_VERSION.to_string(),
        metrics: None,
        metric_failures: BTreeMap::new(),
        warnings: Vec::new(),
    };
    if pairs.len() < 2 {
        report
            .warnings
            .push(format!("M < 2 ({} model): metrics skipped", pairs.len()));
    } else {
        let summary = summarize(&pairs)?;
        report.metrics = Some(summary.values);
        report.metric_failures = summary.failures;
    }
    Ok(report)
}

/// Fills a ranking report's metrics from ground truth.
pub fn attach_metrics(
    report: &mut RankingReport,
    ground_truth: &[(String, f64)],
) -> Result<(), PipelineError> {
    let scores: Vec<(String, f64)> = report
        .entries
        .iter()
        .map(|e| (e.model_id.clone(), e.t_score))
        .collect();
    let mut evaluated = evaluate_scores(&scores, ground_truth)?;
    report.metrics = evaluated.metrics;
    report.metric_failures = evaluated.metric_failures;
    report.warnings.append(&mut evaluated.warnings);
    Ok(())
}
