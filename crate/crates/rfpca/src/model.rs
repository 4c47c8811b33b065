//! JSON model and report files.
//!
//! Matrices are stored as nested row arrays. Files are written with sorted
//! keys so that parsing and re-serializing reproduces them byte for byte.

use std::fs;
use std::path::Path;

use rfpca_core::linalg::{Matrix, Vector};
use rfpca_core::metrics::{FairnessReport, Provenance};
use rfpca_core::optimizer::SolverOptions;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

pub const MODEL_VERSION: u32 = 1;

pub fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn rows_matrix(rows: &[Vec<f64>]) -> Result<Matrix> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(AppError::validation("ragged matrix in model file"));
    }
    Ok(Matrix::from_row_iterator(rows.len(), ncols, rows.iter().flatten().copied()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub k: usize,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub radii: Vec<f64>,
    pub solver: Option<SolverOptions>,
    pub split: Option<f64>,
    pub standardize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub provenance: Provenance,
    pub features: Vec<String>,
    pub attribute: String,
    pub groups: Vec<String>,
    pub config: FitConfig,
    /// Subtracted from raw features before projecting.
    pub center: Vec<f64>,
    /// Divides centered features when standardization was requested.
    pub scale: Option<Vec<f64>>,
    pub objective: f64,
    /// `d × k` basis, one array per row.
    pub v: Vec<Vec<f64>>,
    /// `d × (d − k)` solver output, when a solver ran.
    pub u: Option<Vec<Vec<f64>>>,
}

impl ModelFile {
    pub fn v_matrix(&self) -> Result<Matrix> {
        rows_matrix(&self.v)
    }

    pub fn center_vector(&self) -> Vector {
        Vector::from_column_slice(&self.center)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub k: usize,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub objective: f64,
    pub groups: Vec<String>,
    pub train: FairnessReport,
    pub test: Option<FairnessReport>,
}

/// Pretty JSON with keys in sorted order.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let tree = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&tree)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = to_canonical_json(value)?;
    fs::write(path, text).map_err(|source| AppError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| AppError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}
