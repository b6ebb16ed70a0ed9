use std::collections::HashMap;
use std::path::Path;

use ordqual_core::types::{validate_instance, RawRow};
use ordqual_core::{Dataset, Strictness, NUM_CLASSES};
use serde_json::Value;

use super::{read_to_string, write_atomic};
use crate::error::{DroppedRow, IoError, Result};

/// Required columns, in the order they are written.
pub const DATASET_COLUMNS: [&str; 8] = ["id", "p_stub", "p_start", "p_c", "p_b", "p_ga", "p_fa", "label"];
const WEIGHT_COLUMN: &str = "weight";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    #[default]
    Csv,
    Jsonl,
}

impl DataFormat {
    /// `.jsonl` / `.ndjson` are JSON lines; anything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("jsonl") || ext.eq_ignore_ascii_case("ndjson") => DataFormat::Jsonl,
            _ => DataFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    /// Rows dropped in lenient mode (always empty in strict mode).
    pub dropped: Vec<DroppedRow>,
    /// Data rows seen, valid or not.
    pub rows_read: usize,
}

pub fn read_dataset(path: &Path, format: Option<DataFormat>, mode: Strictness) -> Result<LoadedDataset> {
    let text = read_to_string(path)?;
    let format = format.unwrap_or_else(|| DataFormat::from_path(path));
    parse_dataset(&text, format, mode, &path.display().to_string())
}

pub fn parse_dataset(text: &str, format: DataFormat, mode: Strictness, provenance: &str) -> Result<LoadedDataset> {
    let rows = match format {
        DataFormat::Csv => csv_rows(text)?,
        DataFormat::Jsonl => jsonl_rows(text)?,
    };
    let rows_read = rows.len();
    let mut kept = Vec::with_capacity(rows.len());
    let mut dropped = Vec::new();
    for (i, row) in rows.into_iter().enumerate() {
        let checked = row.and_then(|raw| {
            validate_instance(&raw).map_err(|e| DroppedRow { row: 0, kind: e.kind().into(), message: e.to_string() })
        });
        match checked {
            Ok(inst) => kept.push(inst),
            Err(mut d) => {
                d.row = i + 1;
                dropped.push(d);
            }
        }
    }
    if mode == Strictness::Strict && !dropped.is_empty() {
        return Err(IoError::InvalidRows(dropped));
    }
    let dataset = Dataset::new(kept, provenance)?;
    Ok(LoadedDataset { dataset, dropped, rows_read })
}

type RowResult = std::result::Result<RawRow, DroppedRow>;

fn parse_error(message: String) -> DroppedRow {
    DroppedRow { row: 0, kind: "ParseError".into(), message }
}

fn parse_number(column: &str, text: &str) -> std::result::Result<f64, DroppedRow> {
    text.trim().parse().map_err(|_| parse_error(format!("column `{column}`: `{text}` is not a number")))
}

fn csv_rows(text: &str) -> Result<Vec<RowResult>> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| IoError::Malformed { line: 1, message: e.to_string() })?.clone();
    let position = |name: &str| headers.iter().position(|h| h == name);
    let mut index = [0usize; 8];
    for (slot, name) in index.iter_mut().zip(DATASET_COLUMNS) {
        *slot = position(name).ok_or_else(|| IoError::MissingColumn(name.into()))?;
    }
    let weight = position(WEIGHT_COLUMN);
    let mut rows = Vec::new();
    for record in reader.records() {
        let row = match record {
            Err(e) => Err(parse_error(e.to_string())),
            Ok(record) => (|| {
                let field = |i: usize| {
                    record.get(i).ok_or_else(|| parse_error(format!("row has only {} fields", record.len())))
                };
                let mut probs = [0.0; NUM_CLASSES];
                for (k, p) in probs.iter_mut().enumerate() {
                    *p = parse_number(DATASET_COLUMNS[k + 1], field(index[k + 1])?)?;
                }
                let weight = match weight.and_then(|i| record.get(i)) {
                    None | Some("") => None,
                    Some(w) => Some(parse_number(WEIGHT_COLUMN, w)?),
                };
                Ok(RawRow { id: field(index[0])?.into(), probs, label: field(index[7])?.into(), weight })
            })(),
        };
        rows.push(row);
    }
    Ok(rows)
}

fn jsonl_rows(text: &str) -> Result<Vec<RowResult>> {
    let mut rows = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let object: HashMap<String, Value> = match serde_json::from_str(line) {
            Ok(o) => o,
            Err(e) => {
                rows.push(Err(parse_error(e.to_string())));
                continue;
            }
        };
        if let Some(missing) = DATASET_COLUMNS.iter().find(|k| !object.contains_key(**k)) {
            return Err(IoError::MissingColumn((*missing).into()));
        }
        rows.push(json_row(&object));
    }
    Ok(rows)
}

fn json_row(object: &HashMap<String, Value>) -> RowResult {
    let text = |key: &str| match &object[key] {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(parse_error(format!("key `{key}`: expected a string, got {other}"))),
    };
    let number = |key: &str| match &object[key] {
        Value::Number(n) => n.as_f64().ok_or_else(|| parse_error(format!("key `{key}`: {n} is out of range"))),
        Value::String(s) => parse_number(key, s),
        other => Err(parse_error(format!("key `{key}`: expected a number, got {other}"))),
    };
    let mut probs = [0.0; NUM_CLASSES];
    for (k, p) in probs.iter_mut().enumerate() {
        *p = number(DATASET_COLUMNS[k + 1])?;
    }
    let weight = match object.get(WEIGHT_COLUMN) {
        None | Some(Value::Null) => None,
        Some(_) => Some(number(WEIGHT_COLUMN)?),
    };
    Ok(RawRow { id: text("id")?, probs, label: text("label")?, weight })
}

/// Write a dataset as CSV. A weight column is added only when some weight is not 1.
pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    let weighted = dataset.iter().any(|i| i.weight() != 1.0);
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = DATASET_COLUMNS.to_vec();
    if weighted {
        header.push(WEIGHT_COLUMN);
    }
    let csv_err = |e: csv::Error| IoError::io(path, e.into());
    writer.write_record(&header).map_err(csv_err)?;
    for inst in dataset {
        let mut record = vec![inst.id.clone()];
        record.extend(inst.probs.as_array().iter().map(|p| p.to_string()));
        record.push(inst.label.name().into());
        if weighted {
            record.push(inst.weight().to_string());
        }
        writer.write_record(&record).map_err(csv_err)?;
    }
    let bytes = writer.into_inner().map_err(|e| IoError::io(path, e.into_error()))?;
    write_atomic(path, &bytes)
}
