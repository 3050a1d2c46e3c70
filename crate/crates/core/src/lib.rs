//! Transferability scoring of pre-trained models.
//!
//! A candidate model is scored by how well a linear map of its features
//! explains a simplex-weighted combination of label embeddings produced by
//! several foundation models. The fitted residual `s` of that weighted
//! least-squares problem gives the transferability `T = −s`; ranking a model
//! zoo by `T` and comparing against fine-tuned accuracy is handled by
//! [`metrics`].

pub mod labelspace;
pub mod linalg;
pub mod metrics;
pub mod simplex;
pub mod solver;
pub mod synth;

pub use labelspace::{
    flatten_for_t, normalize_flabels, one_hot_stack, stack_flabels, FLabelStack, FeatureMatrix,
    LabelError,
};
pub use linalg::{least_squares, spectral_norm_upper_bound, LinalgError, Matrix};
pub use metrics::{MetricError, ScorePair};
pub use simplex::{project_simplex, sparsemax, SimplexError, SimplexVector};
pub use solver::{
    emms_score, solve, solve_fast, solve_pgd, solve_pgd_observed, wlsr_objective, Algorithm,
    InnerStep, PgdObserver, SolverConfig, SolverError, WlsrSolution,
};
pub use synth::{generate_model_suite, generate_task, ModelSuite, SyntheticTask, TaskParams};
