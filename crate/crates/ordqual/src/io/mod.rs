//! File formats: datasets, population counts, model files and reports.

mod dataset;
mod model;
mod population;
mod reports;

use std::fs;
use std::io::Write;
use std::path::Path;

pub use dataset::{parse_dataset, read_dataset, write_dataset, DataFormat, LoadedDataset, DATASET_COLUMNS};
pub use model::{model_from_json, model_to_json, read_model, write_model, SCHEMA_VERSION};
pub use population::{parse_population, read_population, render_population};
pub use reports::{
    accuracy_csv, calibration_csv, calibration_plot_csv, correlation_csv, parse_scores, read_scores, score_csv,
    thresholds_csv, truth_csv, weights_csv, ScoreColumns,
};

use crate::error::{IoError, Result};

/// Write `contents` to `path` through a temporary file in the same directory,
/// so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| IoError::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| IoError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| IoError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| IoError::io(path, e.error))?;
    Ok(())
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| IoError::io(path, e))
}
