//! Raw-CSV-to-feature-matrix pipeline: load, merge, derive calendar features,
//! impute, select by correlation, standardize, split.

mod dataset;
mod features;
mod impute;
mod load;
mod scale;
mod table;

pub use dataset::{chronological_split, random_split, split, FeatureMatrix, SplitMode};
pub use features::{pearson, select_features, FeatureSpec};
pub use impute::{complete_hourly_grid, impute_missing, ImputationReport, ImputePolicy};
pub use load::{
    derive_time_features, load_energy_csv, load_weather_csv, merge_on_timestamp, LoadOptions,
};
pub use scale::{standardize_apply, standardize_fit, standardize_invert, ScalerParams};
pub use table::{Column, Provenance, TimeTable};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no timestamp column found in {path} (looked for {candidates:?})")]
    MissingTimestampColumn { path: String, candidates: Vec<String> },
    #[error("no city column found in {path}")]
    MissingCityColumn { path: String },
    #[error("{path} contains no data rows")]
    EmptyFile { path: String },
    #[error("malformed header in {path}: {detail}")]
    MalformedHeader { path: String, detail: String },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("timestamps are not strictly increasing at row {row}")]
    UnsortedTimestamps { row: usize },
    #[error("timestamp {timestamp} is not on the hourly grid")]
    NonHourlyTimestamp { timestamp: String },
    #[error("column {column} has length {got}, expected {expected}")]
    ColumnLengthMismatch {
        column: String,
        got: usize,
        expected: usize,
    },
    #[error("the two tables share no timestamps")]
    EmptyIntersection,
    #[error("column {column} has no observed values to impute from")]
    AllMissingColumn { column: String },
    #[error("column {column} still has missing values; run imputation first")]
    MissingValues { column: String },
    #[error("target column {column} not found")]
    TargetMissing { column: String },
    #[error("target column {column} is constant; correlations are undefined")]
    ConstantTarget { column: String },
    #[error("requested {k} features but only {available} non-constant candidates exist")]
    KTooLarge { k: usize, available: usize },
    #[error("feature column {column} is constant on the training split")]
    ConstantColumn { column: String },
    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("split leaves an empty side: {n_train} train rows, {n_test} test rows")]
    DegenerateSplit { n_train: usize, n_test: usize },
    #[error("train fraction {fraction} is outside (0, 1)")]
    BadFraction { fraction: f64 },
    #[error("non-finite value in column {column} at row {row}")]
    NonFinite { column: String, row: usize },
}
