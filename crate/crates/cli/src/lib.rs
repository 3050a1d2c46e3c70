//! File formats, the model-ranking pipeline and the benchmark harness built
//! on `emms-core`.

pub mod bench;
pub mod error;
pub mod manifest;
pub mod npy;
pub mod pipeline;
pub mod suite;
pub mod tables;

pub use error::{IoError, PipelineError};
pub use manifest::{Manifest, ModelEntry, OneHotSpec, RankingReport, ReportEntry};
pub use npy::{read_npy, write_npy};
pub use pipeline::{rank_models, run_ranking, LabelInput, ModelInput};
