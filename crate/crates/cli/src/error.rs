use std::path::Path;

use emms_core::metrics::MetricError;
use emms_core::{LabelError, LinalgError, SolverError};
use thiserror::Error;

/// Failures reading or writing input and output files.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("{file}: I/O failure: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: bad NPY magic at offset {offset}")]
    BadMagic { file: String, offset: usize },
    #[error("{file}: unsupported dtype '{descr}' at offset {offset} (expected '<f4' or '<f8')")]
    UnsupportedDtype {
        file: String,
        offset: usize,
        descr: String,
    },
    #[error("{file}: Fortran-ordered arrays are not supported (offset {offset})")]
    FortranOrderUnsupported { file: String, offset: usize },
    #[error("{file}: truncated at offset {offset}, expected {expected} bytes")]
    TruncatedPayload {
        file: String,
        offset: usize,
        expected: usize,
    },
    #[error("{file}: malformed NPY header at offset {offset}: {reason}")]
    BadHeader {
        file: String,
        offset: usize,
        reason: String,
    },
    #[error("{file}: refusing to write an empty matrix")]
    EmptyMatrix { file: String },
    #[error("{file}: invalid matrix: {source}")]
    Matrix {
        file: String,
        #[source]
        source: LinalgError,
    },
    #[error("{file}: line {line} has a different number of fields than line 1")]
    RaggedRows { file: String, line: u64 },
    #[error("{file}: duplicate model '{id}'")]
    DuplicateModel { file: String, id: String },
    #[error("{file}: cannot parse a finite number at line {line}, column {col}")]
    UnparsableFloat { file: String, line: u64, col: usize },
    #[error("{file}: cannot parse a label id at line {line}")]
    UnparsableLabel { file: String, line: u64 },
    #[error("{file}: expected header '{expected}'")]
    MissingHeader {
        file: String,
        expected: &'static str,
    },
    #[error("{file}: malformed CSV: {reason}")]
    Csv { file: String, reason: String },
    #[error("{file}: invalid JSON: {source}")]
    Json {
        file: String,
        #[source]
        source: serde_json::Error,
    },
}

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            file: path.display().to_string(),
            source,
        }
    }
}

/// Failures of the ranking and benchmark pipelines.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("{features} has {feature_rows} rows but {labels} has {label_rows}")]
    ShapeMismatch {
        features: String,
        feature_rows: usize,
        labels: String,
        label_rows: usize,
    },
    #[error("label embeddings: {source} (files: {files})")]
    Labels {
        files: String,
        #[source]
        source: LabelError,
    },
    #[error("model '{model}': {source}")]
    Model {
        model: String,
        #[source]
        source: SolverError,
    },
    #[error("ground truth has no score for model '{0}'")]
    MissingGroundTruth(String),
    #[error("duplicate model id '{0}'")]
    DuplicateModel(String),
    #[error("metrics: {0}")]
    Metric(#[from] MetricError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl PipelineError {
    /// True for failures caused by numerics rather than malformed input.
    pub fn is_numerical(&self) -> bool {
        match self {
            PipelineError::Model { source, .. } => matches!(
                source,
                SolverError::NonFinite { .. }
                    | SolverError::Linalg(LinalgError::RankDeficient { .. })
            ),
            _ => false,
        }
    }
}
