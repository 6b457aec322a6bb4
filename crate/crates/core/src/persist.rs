//! Versioned on-disk artifacts. Everything is schema-tagged JSON written
//! atomically (temp file + rename); floats round-trip exactly, so a loaded
//! model predicts bit-identically to the in-memory one.

use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;
use crate::pipeline::{FeatureMatrix, FeatureSpec, ScalerParams};
use crate::regressors::FittedModel;

pub const MATRIX_SCHEMA: &str = "pricebench.matrix.v1";
pub const MODEL_SCHEMA: &str = "pricebench.model.v1";
pub const FEATURE_SPEC_SCHEMA: &str = "pricebench.feature_spec.v1";
pub const SCALER_SCHEMA: &str = "pricebench.scaler.v1";

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("failed to access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed artifact {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path} carries schema {got:?}, expected {expected:?}")]
    SchemaMismatch {
        path: String,
        expected: String,
        got: String,
    },
    #[error("bad timestamp {value:?} in {path}")]
    BadTimestamp { path: String, value: String },
}

fn io_err(path: &Path, source: std::io::Error) -> PersistError {
    PersistError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write bytes to a temp file in the target directory, then rename into
/// place, so readers never observe a half-written artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PersistError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "artifact".to_string());
    let tmp_path = dir.join(format!(".{file_name}.{}.tmp", std::process::id()));
    {
        let mut tmp = fs::File::create(&tmp_path).map_err(|e| io_err(&tmp_path, e))?;
        tmp.write_all(bytes).map_err(|e| io_err(&tmp_path, e))?;
        tmp.sync_all().map_err(|e| io_err(&tmp_path, e))?;
    }
    fs::rename(&tmp_path, path).map_err(|e| io_err(path, e))?;
    Ok(())
}

fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PersistError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| PersistError::Json {
        path: path.display().to_string(),
        source: e,
    })?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, PersistError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| PersistError::Json {
        path: path.display().to_string(),
        source: e,
    })
}

fn check_schema(path: &Path, expected: &str, got: &str) -> Result<(), PersistError> {
    if got == expected {
        Ok(())
    } else {
        Err(PersistError::SchemaMismatch {
            path: path.display().to_string(),
            expected: expected.to_string(),
            got: got.to_string(),
        })
    }
}

fn format_ts(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

#[derive(Serialize, Deserialize)]
struct MatrixArtifact {
    schema_id: String,
    feature_names: Vec<String>,
    timestamps: Vec<String>,
    n_rows: usize,
    n_cols: usize,
    /// Row-major feature values.
    x: Vec<f64>,
    y: Vec<f64>,
    scaler: Option<ScalerParams>,
}

/// Persist a feature matrix with the scaler that produced it (if any).
pub fn save_feature_matrix(
    path: &Path,
    fm: &FeatureMatrix,
    scaler: Option<&ScalerParams>,
) -> Result<(), PersistError> {
    let artifact = MatrixArtifact {
        schema_id: MATRIX_SCHEMA.to_string(),
        feature_names: fm.feature_names.clone(),
        timestamps: fm.timestamps.iter().map(format_ts).collect(),
        n_rows: fm.x.nrows(),
        n_cols: fm.x.ncols(),
        x: fm.x.data().to_vec(),
        y: fm.y.clone(),
        scaler: scaler.cloned(),
    };
    save_json(path, &artifact)
}

pub fn load_feature_matrix(
    path: &Path,
) -> Result<(FeatureMatrix, Option<ScalerParams>), PersistError> {
    let artifact: MatrixArtifact = load_json(path)?;
    check_schema(path, MATRIX_SCHEMA, &artifact.schema_id)?;
    let timestamps = artifact
        .timestamps
        .iter()
        .map(|s| {
            DateTime::parse_from_rfc3339(s)
                .map(|t| t.with_timezone(&Utc))
                .map_err(|_| PersistError::BadTimestamp {
                    path: path.display().to_string(),
                    value: s.clone(),
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let fm = FeatureMatrix {
        x: Matrix::from_vec(artifact.n_rows, artifact.n_cols, artifact.x),
        y: artifact.y,
        feature_names: artifact.feature_names,
        timestamps,
    };
    Ok((fm, artifact.scaler))
}

/// CSV view of a feature matrix: timestamp, features..., target.
pub fn feature_matrix_to_csv(fm: &FeatureMatrix) -> String {
    let mut out = String::from("timestamp");
    for name in &fm.feature_names {
        out.push(',');
        out.push_str(&csv_escape(name));
    }
    out.push_str(",target\n");
    for i in 0..fm.n_rows() {
        out.push_str(&format_ts(&fm.timestamps[i]));
        for j in 0..fm.n_features() {
            out.push(',');
            out.push_str(&fm.x.get(i, j).to_string());
        }
        out.push(',');
        out.push_str(&fm.y[i].to_string());
        out.push('\n');
    }
    out
}

pub fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

#[derive(Serialize, Deserialize)]
struct ModelArtifact {
    schema_id: String,
    model: FittedModel,
}

pub fn save_model(path: &Path, model: &FittedModel) -> Result<(), PersistError> {
    save_json(
        path,
        &ModelArtifact {
            schema_id: MODEL_SCHEMA.to_string(),
            model: model.clone(),
        },
    )
}

pub fn load_model(path: &Path) -> Result<FittedModel, PersistError> {
    let artifact: ModelArtifact = load_json(path)?;
    check_schema(path, MODEL_SCHEMA, &artifact.schema_id)?;
    Ok(artifact.model)
}

#[derive(Serialize, Deserialize)]
struct FeatureSpecArtifact {
    schema_id: String,
    spec: FeatureSpec,
}

pub fn save_feature_spec(path: &Path, spec: &FeatureSpec) -> Result<(), PersistError> {
    save_json(
        path,
        &FeatureSpecArtifact {
            schema_id: FEATURE_SPEC_SCHEMA.to_string(),
            spec: spec.clone(),
        },
    )
}

pub fn load_feature_spec(path: &Path) -> Result<FeatureSpec, PersistError> {
    let artifact: FeatureSpecArtifact = load_json(path)?;
    check_schema(path, FEATURE_SPEC_SCHEMA, &artifact.schema_id)?;
    Ok(artifact.spec)
}

#[derive(Serialize, Deserialize)]
struct ScalerArtifact {
    schema_id: String,
    scaler: ScalerParams,
}

pub fn save_scaler(path: &Path, scaler: &ScalerParams) -> Result<(), PersistError> {
    save_json(
        path,
        &ScalerArtifact {
            schema_id: SCALER_SCHEMA.to_string(),
            scaler: scaler.clone(),
        },
    )
}

pub fn load_scaler(path: &Path) -> Result<ScalerParams, PersistError> {
    let artifact: ScalerArtifact = load_json(path)?;
    check_schema(path, SCALER_SCHEMA, &artifact.schema_id)?;
    Ok(artifact.scaler)
}
