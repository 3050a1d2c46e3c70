//! Weighted linear square regression over a stack of noisy label embeddings.
//!
//! Both solvers minimize
//!
//! ```text
//! s(w, t) = ½ ‖X w − Σ_k t_k Z_k‖_F²    over w ∈ R^{D×L}, t ∈ Δ^{K−1}
//! ```
//!
//! [`solve_pgd`] alternates one gradient step on `w` with an inner loop of
//! projected gradient steps on `t`. Both step sizes are the reciprocal of an
//! upper bound on the corresponding smoothness constant, so every step is a
//! descent step and the score trace is non-increasing.
//!
//! [`solve_fast`] replaces both updates by closed-form least squares and maps
//! the unconstrained `t` back onto the simplex with sparsemax. It converges
//! quickly in practice but carries no monotonicity guarantee.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labelspace::{residual, FLabelStack, FeatureMatrix};
use crate::linalg::{
    default_ridge, spectral_norm_upper_bound, LinalgError, Matrix, NormalEquations,
};
use crate::simplex::{project_simplex, sparsemax, SimplexError, SimplexVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("features are {features:?} (N×D) but labels are {labels:?} (N×L×K)")]
    ShapeMismatch {
        features: (usize, usize),
        labels: (usize, usize, usize),
    },
    #[error("regression weights are {found:?}, expected {expected:?}")]
    WeightShape {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("simplex weights have length {found}, expected {expected}")]
    SimplexLength { expected: usize, found: usize },
    #[error("empty problem: N, D, L and K must all be at least 1")]
    Empty,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("objective became non-finite at outer iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Projected-gradient alternating minimization.
    Pgd,
    /// Alternating least squares with sparsemax.
    Fast,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Pgd => "pgd",
            Algorithm::Fast => "fast",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pgd" => Ok(Algorithm::Pgd),
            "fast" => Ok(Algorithm::Fast),
            other => Err(format!(
                "unknown algorithm '{other}' (expected pgd or fast)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub max_outer_iters: usize,
    /// Projected-gradient steps on `t` per outer iteration (PGD only).
    pub inner_t_iters: usize,
    /// Relative score-change tolerance; PGD also stops its inner loop once
    /// `‖t⁺ − t‖₂` drops to this value.
    pub tol: f64,
    /// Fixed ridge for the least-squares steps. `None` picks
    /// `1e-10 · trace(G) / dim` for each Gram matrix `G`.
    pub ridge: Option<f64>,
    /// Step size for `w` (PGD).
    pub eta_override: Option<f64>,
    /// Step size for `t` (PGD).
    pub beta_override: Option<f64>,
    /// Append a constant-one feature before solving.
    pub intercept: bool,
}

impl SolverConfig {
    pub const DEFAULT_TOL: f64 = 1e-6;

    pub fn pgd() -> Self {
        Self {
            algorithm: Algorithm::Pgd,
            max_outer_iters: 10,
            inner_t_iters: 100,
            tol: Self::DEFAULT_TOL,
            ridge: None,
            eta_override: None,
            beta_override: None,
            intercept: false,
        }
    }

    pub fn fast() -> Self {
        Self {
            algorithm: Algorithm::Fast,
            max_outer_iters: 3,
            ..Self::pgd()
        }
    }

    pub fn for_algorithm(algorithm: Algorithm) -> Self {
        match algorithm {
            Algorithm::Pgd => Self::pgd(),
            Algorithm::Fast => Self::fast(),
        }
    }

    pub fn with_max_outer_iters(mut self, iters: usize) -> Self {
        self.max_outer_iters = iters;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_ridge(mut self, ridge: f64) -> Self {
        self.ridge = Some(ridge);
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidConfig(msg));
        if self.max_outer_iters < 1 {
            return bad("max_outer_iters must be at least 1".into());
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if let Some(r) = self.ridge {
            if !(r >= 0.0 && r.is_finite()) {
                return bad(format!("ridge must be finite and non-negative, got {r}"));
            }
        }
        for (name, v) in [("eta", self.eta_override), ("beta", self.beta_override)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(format!("{name} must be positive, got {v}"));
                }
            }
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::pgd()
    }
}

/// Result of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct WlsrSolution {
    /// Regression weights, `D×L` (`(D+1)×L` with an intercept).
    pub w: Matrix,
    pub t: SimplexVector,
    /// `½‖Xw − Zt‖_F²` at the returned `(w, t)`.
    pub score: f64,
    /// Score at initialization followed by the score after each outer iteration.
    pub trace: Vec<f64>,
    pub iters: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// One projected-gradient step on `t`, reported to a [`PgdObserver`].
#[derive(Debug)]
pub struct InnerStep<'a> {
    pub outer: usize,
    pub step: usize,
    /// Current regression weights (fixed during the inner loop).
    pub w: &'a Matrix,
    pub t_before: &'a SimplexVector,
    pub t_after: &'a SimplexVector,
    /// Step size used for this step.
    pub beta: f64,
}

/// Hook into the PGD inner loop, used to instrument the per-step decrease.
pub trait PgdObserver {
    fn inner_step(&mut self, step: &InnerStep<'_>);
}

impl PgdObserver for () {
    fn inner_step(&mut self, _: &InnerStep<'_>) {}
}

impl<F: FnMut(&InnerStep<'_>)> PgdObserver for F {
    fn inner_step(&mut self, step: &InnerStep<'_>) {
        self(step)
    }
}

/// `½‖Xw − Zt‖_F²`.
pub fn wlsr_objective(
    x: &FeatureMatrix,
    z: &FLabelStack,
    w: &Matrix,
    t: &SimplexVector,
) -> Result<f64, SolverError> {
    check_shapes(x, z)?;
    if w.shape() != (x.d(), z.l()) {
        return Err(SolverError::WeightShape {
            expected: (x.d(), z.l()),
            found: w.shape(),
        });
    }
    if t.len() != z.k() {
        return Err(SolverError::SimplexLength {
            expected: z.k(),
            found: t.len(),
        });
    }
    let xw = x.matrix().matmul(w)?;
    Ok(half_sq(&xw, z, t))
}

fn half_sq(xw: &Matrix, z: &FLabelStack, t: &SimplexVector) -> f64 {
    0.5 * residual(xw, z, t).frobenius_norm_sq()
}

fn check_shapes(x: &FeatureMatrix, z: &FLabelStack) -> Result<(), SolverError> {
    if x.n() != z.n() {
        return Err(SolverError::ShapeMismatch {
            features: (x.n(), x.d()),
            labels: (z.n(), z.l(), z.k()),
        });
    }
    if x.n() == 0 || x.d() == 0 || z.l() == 0 || z.k() == 0 {
        return Err(SolverError::Empty);
    }
    Ok(())
}

fn degeneracy_warnings(n: usize, d: usize, k: usize) -> Vec<String> {
    let mut warnings = Vec::new();
    if n < d {
        warnings.push(format!("N = {n} < D = {d}: features are rank deficient"));
    }
    if n < k {
        warnings.push(format!(
            "N = {n} < K = {k}: label oracles are rank deficient"
        ));
    }
    warnings
}

fn prepare(x: &FeatureMatrix, cfg: &SolverConfig) -> FeatureMatrix {
    if cfg.intercept {
        x.with_intercept()
    } else {
        x.clone()
    }
}

fn relative_change(prev: f64, next: f64) -> f64 {
    (prev - next).abs() / prev.max(1e-30)
}

/// Step size `1 / bound(2G)` for a Gram matrix `G`; zero when `G = 0`.
fn inverse_smoothness(gram: &Matrix) -> f64 {
    let bound = spectral_norm_upper_bound(&gram.scale(2.0));
    if bound > 0.0 {
        1.0 / bound
    } else {
        0.0
    }
}

/// Projected-gradient alternating minimization.
pub fn solve_pgd(
    x: &FeatureMatrix,
    z: &FLabelStack,
    cfg: &SolverConfig,
) -> Result<WlsrSolution, SolverError> {
    solve_pgd_observed(x, z, cfg, &mut ())
}

/// [`solve_pgd`] reporting every inner `t` step to `observer`.
pub fn solve_pgd_observed<O: PgdObserver + ?Sized>(
    x: &FeatureMatrix,
    z: &FLabelStack,
    cfg: &SolverConfig,
    observer: &mut O,
) -> Result<WlsrSolution, SolverError> {
    cfg.validate()?;
    check_shapes(x, z)?;
    let x = prepare(x, cfg);
    let xm = x.matrix();
    let (d, l, k) = (x.d(), z.l(), z.k());

    let eta = match cfg.eta_override {
        Some(eta) => eta,
        None => inverse_smoothness(&xm.gram()),
    };
    let z_gram = z.gram();
    let beta = match cfg.beta_override {
        Some(beta) => beta,
        None => inverse_smoothness(&z_gram),
    };

    let mut w = Matrix::filled(d, l, 1.0 / d as f64);
    let mut t = SimplexVector::uniform(k)?;
    let mut xw = xm.matmul(&w)?;
    let mut score = half_sq(&xw, z, &t);
    if !score.is_finite() {
        return Err(SolverError::NonFinite { iteration: 0 });
    }
    let mut trace = vec![score];
    let mut converged = false;
    let mut iters = 0;

    for outer in 1..=cfg.max_outer_iters {
        iters = outer;

        // w ← w − η Xᵀ(Xw − Zt)
        let r = residual(&xw, z, &t);
        let grad = xm.t_matmul(&r)?;
        w.axpy(-eta, &grad)?;
        xw = xm.matmul(&w)?;

        // ∇_t s = Z̃ᵀZ̃ t − Z̃ᵀ vec(Xw)
        let projected = z.inner_products(&xw);
        for step in 0..cfg.inner_t_iters {
            let gt = z_gram.matvec(t.as_slice());
            let moved: Vec<f64> = t
                .as_slice()
                .iter()
                .zip(gt.iter().zip(&projected))
                .map(|(ti, (g, b))| ti - beta * (g - b))
                .collect();
            let next = project_simplex(&moved)?;
            observer.inner_step(&InnerStep {
                outer,
                step,
                w: &w,
                t_before: &t,
                t_after: &next,
                beta,
            });
            let delta = next
                .as_slice()
                .iter()
                .zip(t.as_slice())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            t = next;
            if delta <= cfg.tol {
                break;
            }
        }

        let next = half_sq(&xw, z, &t);
        if !next.is_finite() {
            return Err(SolverError::NonFinite { iteration: outer });
        }
        trace.push(next);
        let change = relative_change(score, next);
        score = next;
        if change <= cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(WlsrSolution {
        w,
        t,
        score,
        trace,
        iters,
        converged,
        warnings: degeneracy_warnings(x.n(), d, k),
    })
}

/// Alternating least squares for `w` and `t` with a sparsemax projection.
pub fn solve_fast(
    x: &FeatureMatrix,
    z: &FLabelStack,
    cfg: &SolverConfig,
) -> Result<WlsrSolution, SolverError> {
    cfg.validate()?;
    check_shapes(x, z)?;
    let x = prepare(x, cfg);
    let xm = x.matrix();
    let (d, l, k) = (x.d(), z.l(), z.k());

    let x_gram = xm.gram();
    let ridge_w = cfg.ridge.unwrap_or_else(|| default_ridge(&x_gram));
    let w_system = NormalEquations::from_gram(x_gram, ridge_w)?;
    let z_gram = z.gram();
    let ridge_t = cfg.ridge.unwrap_or_else(|| default_ridge(&z_gram));
    let t_system = NormalEquations::from_gram(z_gram, ridge_t)?;

    let mut w = Matrix::filled(d, l, 1.0 / d as f64);
    let mut t = SimplexVector::uniform(k)?;
    let mut score = half_sq(&xm.matmul(&w)?, z, &t);
    if !score.is_finite() {
        return Err(SolverError::NonFinite { iteration: 0 });
    }
    let mut trace = vec![score];
    let mut converged = false;
    let mut iters = 0;

    for outer in 1..=cfg.max_outer_iters {
        iters = outer;
        w = w_system.solve(xm, &z.combine(t.as_slice()))?;
        let xw = xm.matmul(&w)?;
        let t_raw = t_system.solve_projected(&Matrix::column(z.inner_products(&xw)))?;
        if !t_raw.is_finite() {
            return Err(SolverError::NonFinite { iteration: outer });
        }
        t = sparsemax(t_raw.as_slice())?;

        let next = half_sq(&xw, z, &t);
        if !next.is_finite() {
            return Err(SolverError::NonFinite { iteration: outer });
        }
        trace.push(next);
        let change = relative_change(score, next);
        score = next;
        if change <= cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(WlsrSolution {
        w,
        t,
        score,
        trace,
        iters,
        converged,
        warnings: degeneracy_warnings(x.n(), d, k),
    })
}

/// Runs the configured algorithm.
pub fn solve(
    x: &FeatureMatrix,
    z: &FLabelStack,
    cfg: &SolverConfig,
) -> Result<WlsrSolution, SolverError> {
    match cfg.algorithm {
        Algorithm::Pgd => solve_pgd(x, z, cfg),
        Algorithm::Fast => solve_fast(x, z, cfg),
    }
}

/// Transferability `T = −s`: higher is better, zero is a perfect fit.
pub fn emms_score(
    x: &FeatureMatrix,
    z: &FLabelStack,
    cfg: &SolverConfig,
) -> Result<f64, SolverError> {
    Ok(-solve(x, z, cfg)?.score)
}
