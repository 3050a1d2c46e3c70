//! Times the PGD and fast solvers on identical inputs.

use std::path::Path;
use std::time::Instant;

use emms_core::synth::SynthError;
use emms_core::{generate_task, solve, SolverConfig, SyntheticTask, TaskParams};
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;
use crate::manifest::{Manifest, SCHEMA_VERSION};
use crate::pipeline::{check_unique, load_checked, resolve_manifest, LabelInput, ModelInput};

/// Fixed noise levels `(σ_ε, σ_1, σ_2, σ_3)` of the standard benchmark task.
pub const BENCH_SIGMA: [f64; 4] = [0.1, 0.2, 0.5, 1.0];

/// Standard benchmark task: N=5000, D=512, L=64, K=3, normalized labels.
pub fn bench_params() -> TaskParams {
    let mut p = TaskParams::new(5000, 512, 64, BENCH_SIGMA.to_vec());
    p.normalize = true;
    p
}

pub fn bench_task(seed: u64) -> Result<SyntheticTask, SynthError> {
    generate_task(&bench_params(), seed)
}

/// PGD run to convergence, the yardstick the fast solver is measured against.
pub fn reference_pgd() -> SolverConfig {
    SolverConfig::pgd()
        .with_tol(1e-8)
        .with_max_outer_iters(10_000)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchEntry {
    pub model_id: String,
    /// Objective `s` reached by each solver (lower is better).
    pub pgd_objective: f64,
    pub fast_objective: f64,
    pub pgd_ms: f64,
    pub fast_ms: f64,
    pub pgd_iters: usize,
    pub fast_iters: usize,
    /// `|s_fast − s_pgd| / max(|s_pgd|, tiny)`.
    pub rel_diff: f64,
    /// `fast_ms / pgd_ms`; below 1 means the fast solver won.
    pub time_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: String,
    pub task_name: String,
    pub entries: Vec<BenchEntry>,
    pub pgd_config: SolverConfig,
    pub fast_config: SolverConfig,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn relative_diff(reference: f64, other: f64) -> f64 {
    (other - reference).abs() / reference.abs().max(1e-300)
}

/// Models run one after another so timings do not compete for cores.
pub fn benchmark_models(
    task_name: &str,
    models: &[ModelInput],
    labels: &LabelInput,
    pgd: &SolverConfig,
    fast: &SolverConfig,
) -> Result<BenchReport, PipelineError> {
    check_unique(models)?;
    let mut entries = Vec::with_capacity(models.len());
    for model in models {
        let x = load_checked(model, labels)?;
        let run = |cfg: &SolverConfig| {
            let start = Instant::now();
            let sol = solve(&x, &labels.stack, cfg).map_err(|source| PipelineError::Model {
                model: model.id.clone(),
                source,
            })?;
            Ok::<_, PipelineError>((sol, start.elapsed().as_secs_f64() * 1e3))
        };
        let (p, pgd_ms) = run(pgd)?;
        let (f, fast_ms) = run(fast)?;
        log::info!(
            "{}: pgd {:.1} ms, fast {:.1} ms, objectives {:.6e} / {:.6e}",
            model.id,
            pgd_ms,
            fast_ms,
            p.score,
            f.score
        );
        entries.push(BenchEntry {
            model_id: model.id.clone(),
            pgd_objective: p.score,
            fast_objective: f.score,
            pgd_ms,
            fast_ms,
            pgd_iters: p.iters,
            fast_iters: f.iters,
            rel_diff: relative_diff(p.score, f.score),
            time_ratio: fast_ms / pgd_ms.max(1e-9),
        });
    }
    Ok(BenchReport {
        schema_version: SCHEMA_VERSION.to_string(),
        task_name: task_name.to_string(),
        entries,
        pgd_config: pgd.clone(),
        fast_config: fast.clone(),
    })
}

pub fn run_benchmark(
    manifest_path: impl AsRef<Path>,
    pgd: &SolverConfig,
    fast: &SolverConfig,
) -> Result<BenchReport, PipelineError> {
    let path = manifest_path.as_ref();
    let manifest = Manifest::load(path)?;
    let task = resolve_manifest(&manifest, path.parent().unwrap_or_else(|| Path::new(".")))?;
    benchmark_models(&task.task_name, &task.models, &task.labels, pgd, fast)
}

#[cfg(test)]
mod tests {
    use super::*;
    use emms_core::Algorithm;

    #[test]
    fn small_benchmark_runs() {
        let mut params = TaskParams::new(40, 4, 2, vec![0.1, 0.1, 1.0]);
        params.normalize = true;
        let task = generate_task(&params, 3).unwrap();
        let models = vec![ModelInput::in_memory("m", task.x.clone())];
        let labels = LabelInput::in_memory(task.z.clone());
        let report = benchmark_models(
            "small",
            &models,
            &labels,
            &SolverConfig::pgd(),
            &SolverConfig::for_algorithm(Algorithm::Fast),
        )
        .unwrap();
        let e = &report.entries[0];
        assert!(e.pgd_objective >= 0.0 && e.fast_objective >= 0.0);
        assert!(e.rel_diff.is_finite() && e.time_ratio > 0.0);
        assert!((1..=3).contains(&e.fast_iters));
    }

    #[test]
    fn bench_params_are_fixed() {
        let p = bench_params();
        assert_eq!((p.n, p.d, p.l, p.k), (5000, 512, 64, 3));
        assert!(p.normalize);
    }
}
