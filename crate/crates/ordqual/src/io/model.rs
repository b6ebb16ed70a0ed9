//! Versioned JSON model files.
//!
//! Keys, in order: `schema_version`, `unit`, `pca {mean, loadings,
//! eigenvalues, discarded_eigenvalue}`, `coefficients[5]`, `thresholds[5]`,
//! `covariance[10][10]`, `fit {loglik, n, n_effective, converged, grad_norm,
//! iterations}`. The covariance is over `(θ1..θ5, B1..B5)` where `θ1 = α1` and
//! `θk = ln(αk − αk−1)`. Floats use the shortest representation that reads back
//! to the same bits.

use std::path::Path;

use ordqual_core::linalg::Matrix;
use ordqual_core::ordinal::{FitSummary, NUM_PARAMS};
use ordqual_core::{FittedOrdinalModel, PcaTransform, QualityModel, NUM_CLASSES, NUM_FEATURES, NUM_THRESHOLDS};
use serde::{Deserialize, Serialize};

use super::{read_to_string, write_atomic};
use crate::error::{IoError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    unit: String,
    pca: PcaFile,
    coefficients: [f64; NUM_FEATURES],
    thresholds: [f64; NUM_THRESHOLDS],
    covariance: [[f64; NUM_PARAMS]; NUM_PARAMS],
    fit: FitFile,
}

#[derive(Serialize, Deserialize)]
struct PcaFile {
    mean: [f64; NUM_CLASSES],
    loadings: [[f64; NUM_CLASSES]; NUM_FEATURES],
    eigenvalues: [f64; NUM_FEATURES],
    discarded_eigenvalue: f64,
}

#[derive(Serialize, Deserialize)]
struct FitFile {
    loglik: f64,
    n: usize,
    n_effective: f64,
    converged: bool,
    grad_norm: f64,
    iterations: usize,
}

pub fn model_to_json(model: &QualityModel) -> Result<String> {
    let ord = &model.ordinal;
    let cov = ord.covariance();
    let s = &ord.summary;
    let file = ModelFile {
        schema_version: SCHEMA_VERSION,
        unit: model.unit.clone(),
        pca: PcaFile {
            mean: *model.pca.mean(),
            loadings: *model.pca.loadings(),
            eigenvalues: *model.pca.eigenvalues(),
            discarded_eigenvalue: model.pca.discarded_eigenvalue(),
        },
        coefficients: *ord.coefficients(),
        thresholds: *ord.thresholds(),
        covariance: core::array::from_fn(|i| core::array::from_fn(|j| cov[(i, j)])),
        fit: FitFile {
            loglik: s.loglik,
            n: s.n,
            n_effective: s.n_effective,
            converged: s.converged,
            grad_norm: s.grad_norm,
            iterations: s.iterations,
        },
    };
    // Non-finite values would serialize as null and fail to read back.
    if !(s.loglik.is_finite() && s.n_effective.is_finite() && s.grad_norm.is_finite()) {
        return Err(ordqual_core::Error::NonFiniteInput.into());
    }
    let mut text =
        serde_json::to_string_pretty(&file).map_err(|e| IoError::Malformed { line: 0, message: e.to_string() })?;
    text.push('\n');
    Ok(text)
}

pub fn model_from_json(text: &str) -> Result<QualityModel> {
    let malformed = |e: serde_json::Error| IoError::Malformed { line: e.line(), message: e.to_string() };
    let value: serde_json::Value = serde_json::from_str(text).map_err(malformed)?;
    match value.get("schema_version") {
        Some(v) if v.as_u64() == Some(SCHEMA_VERSION as u64) => {}
        Some(v) => return Err(IoError::SchemaVersionMismatch { found: v.to_string(), expected: SCHEMA_VERSION }),
        None => return Err(IoError::SchemaVersionMismatch { found: "none".into(), expected: SCHEMA_VERSION }),
    }
    let file: ModelFile = serde_json::from_value(value).map_err(malformed)?;
    let pca = PcaTransform::from_parts(file.pca.mean, file.pca.loadings, file.pca.eigenvalues)?
        .with_discarded_eigenvalue(file.pca.discarded_eigenvalue);
    let rows: Vec<Vec<f64>> = file.covariance.iter().map(|r| r.to_vec()).collect();
    let summary = FitSummary {
        loglik: file.fit.loglik,
        n: file.fit.n,
        n_effective: file.fit.n_effective,
        converged: file.fit.converged,
        grad_norm: file.fit.grad_norm,
        iterations: file.fit.iterations,
    };
    let covariance = Matrix::from_rows(&rows).ok_or(ordqual_core::Error::InvalidArgument("ragged covariance"))?;
    let ordinal = FittedOrdinalModel::from_parts(file.coefficients, file.thresholds, covariance, summary)?;
    Ok(QualityModel { unit: file.unit, pca, ordinal })
}

pub fn write_model(path: &Path, model: &QualityModel) -> Result<()> {
    write_atomic(path, model_to_json(model)?.as_bytes())
}

pub fn read_model(path: &Path) -> Result<QualityModel> {
    model_from_json(&read_to_string(path)?)
}
