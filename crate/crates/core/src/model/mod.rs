//! The prediction stack: outcome ingestion, low-variance removal,
//! outcome-correlation filtering, PCA, ridge regression, k-fold cross
//! validation, and evaluation metrics.

mod cv;
mod linalg;
mod metrics;
mod outcomes;
mod pca;
mod ridge;
mod select;

pub use cv::{cross_validate, fit_pipeline, fold_assignments, FittedPipeline, PipelineConfig};
pub use linalg::{cholesky_solve, symmetric_eigh};
pub use metrics::{mse, pearson_r};
pub use outcomes::{load_outcomes, OutcomeTable, OutcomeTransform};
pub use pca::{pca_apply, pca_fit, pca_fit_with, PcaBasis, PcaSpec};
pub use ridge::{ridge_fit, RidgeModel};
pub use select::{correlation_filter, remove_low_variance};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("line {line}: {reason}")]
    SchemaError { line: usize, reason: String },
    #[error("fips {fips}: value {value} is not positive, log10 undefined")]
    NonPositiveUnderLog { fips: String, value: f64 },
    #[error("every column failed the variance floor")]
    AllColumnsDropped,
    #[error("non-finite values in {context}")]
    NonFinite { context: String },
    #[error("{rows} rows where at least {needed} are required")]
    TooFewRows { rows: usize, needed: usize },
    #[error("constant vector: {context}")]
    ConstantVector { context: String },
    #[error("shape mismatch: {context}")]
    ShapeMismatch { context: String },
    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
