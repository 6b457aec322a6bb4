//! Forecasting workbench for hourly electricity prices.
//!
//! The crate covers the full experiment loop: ingest raw energy and weather
//! CSVs into a standardized feature matrix, fit eight from-scratch regression
//! models behind one `FittedModel` contract, score them with six metrics,
//! tune hyperparameters with k-fold cross-validation, and explain single
//! predictions of any fitted model with a local linear surrogate.

pub mod explain;
pub mod linalg;
pub mod metrics;
pub mod model_selection;
pub mod persist;
pub mod pipeline;
pub mod regressors;
pub mod synth;

pub use linalg::Matrix;
pub use metrics::{compute_metrics, MetricsReport};
pub use pipeline::FeatureMatrix;
pub use regressors::{FittedModel, ModelKind, RegressorSpec};
