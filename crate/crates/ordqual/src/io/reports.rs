//! CSV reports. Every writer returns the file contents; the CLI writes them
//! atomically.

use std::path::Path;

use ordqual_core::evaluation::{CorrelationMatrix, EvaluationReport};
use ordqual_core::synth::TruthRecord;
use ordqual_core::{PopulationCounts, QualityClass, ScoreReport, WeightTable, NUM_CLASSES};

use super::read_to_string;
use crate::error::{IoError, Result};

fn to_csv<R: AsRef<[String]>>(header: &[&str], rows: impl IntoIterator<Item = R>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    // Writing to memory cannot fail.
    writer.write_record(header).expect("in-memory csv");
    for row in rows {
        writer.write_record(row.as_ref()).expect("in-memory csv");
    }
    String::from_utf8(writer.into_inner().expect("in-memory csv")).expect("csv output is utf-8")
}

fn num(v: f64) -> String {
    v.to_string()
}

/// `id,phi,ci_low,ci_high,phi_norm,predicted_class,mpqc,evenly_spaced`
pub fn score_csv(report: &ScoreReport) -> String {
    let header = ["id", "phi", "ci_low", "ci_high", "phi_norm", "predicted_class", "mpqc", "evenly_spaced"];
    to_csv(
        &header,
        report.records.iter().map(|r| {
            vec![
                r.id.clone(),
                num(r.phi),
                num(r.ci_low),
                num(r.ci_high),
                num(r.phi_norm),
                r.predicted_class.name().into(),
                r.mpqc.name().into(),
                num(r.evenly_spaced),
            ]
        }),
    )
}

/// One row per threshold on the raw and normalized scales, with 95% intervals.
pub fn thresholds_csv(report: &ScoreReport) -> String {
    let header =
        ["unit", "threshold", "between", "alpha", "ci_low", "ci_high", "alpha_norm", "ci_low_norm", "ci_high_norm"];
    let norm = &report.normalization;
    to_csv(
        &header,
        report.thresholds.iter().enumerate().map(|(k, t)| {
            vec![
                report.unit.clone(),
                (k + 1).to_string(),
                format!("{}|{}", QualityClass::ALL[k].name(), QualityClass::ALL[k + 1].name()),
                num(t.alpha),
                num(t.ci_low),
                num(t.ci_high),
                num(t.alpha_norm),
                num(norm.apply(t.ci_low)),
                num(norm.apply(t.ci_high)),
            ]
        }),
    )
}

/// `unit,class,sample_count,population_count,weight`
pub fn weights_csv(sample: &[u64; NUM_CLASSES], population: &PopulationCounts, table: &WeightTable) -> String {
    to_csv(
        &["unit", "class", "sample_count", "population_count", "weight"],
        QualityClass::ALL.iter().map(|&c| {
            vec![
                table.unit.clone(),
                c.name().into(),
                sample[c.code()].to_string(),
                population.counts()[c.code()].to_string(),
                num(table.get(c)),
            ]
        }),
    )
}

/// `unit,model,accuracy,off_by_one`
pub fn accuracy_csv(report: &EvaluationReport) -> String {
    to_csv(
        &["unit", "model", "accuracy", "off_by_one"],
        report
            .accuracy
            .iter()
            .map(|r| vec![r.unit.clone(), r.model.clone(), num(r.accuracy.accuracy), num(r.accuracy.off_by_one)]),
    )
}

/// `unit,model,class,diff,stderr`
pub fn calibration_csv(report: &EvaluationReport) -> String {
    let rows = report.calibration.iter().flat_map(|panel| {
        panel.diffs.iter().map(move |d| {
            vec![panel.unit.clone(), panel.model.clone(), d.class.name().into(), num(d.diff), num(d.stderr)]
        })
    });
    to_csv(&["unit", "model", "class", "diff", "stderr"], rows)
}

/// Plot-ready calibration series: x is the class code, y the diff, with a
/// ±1.96·stderr band.
pub fn calibration_plot_csv(report: &EvaluationReport) -> String {
    let rows = report.calibration.iter().flat_map(|panel| {
        panel.diffs.iter().map(move |d| {
            let band = 1.96 * d.stderr;
            vec![
                format!("{}/{}", panel.unit, panel.model),
                d.class.code().to_string(),
                num(d.diff),
                num(d.diff - band),
                num(d.diff + band),
            ]
        })
    });
    to_csv(&["series", "x", "y", "y_low", "y_high"], rows)
}

/// Long-form correlation matrix: `measure_a,measure_b,pearson,kendall`.
pub fn correlation_csv(matrix: &CorrelationMatrix) -> String {
    let n = matrix.names.len();
    let rows = (0..n).flat_map(|i| {
        (0..n).map(move |j| {
            vec![matrix.names[i].clone(), matrix.names[j].clone(), num(matrix.pearson[i][j]), num(matrix.kendall[i][j])]
        })
    });
    to_csv(&["measure_a", "measure_b", "pearson", "kendall"], rows)
}

/// Ground-truth sidecar for synthetic data: `id,x1..x5,phi,label,q_stub..q_fa`.
pub fn truth_csv(truth: &[TruthRecord]) -> String {
    let mut header = vec!["id", "x1", "x2", "x3", "x4", "x5", "phi", "label"];
    header.extend(["q_stub", "q_start", "q_c", "q_b", "q_ga", "q_fa"]);
    to_csv(
        &header,
        truth.iter().map(|t| {
            let mut row = vec![t.id.clone()];
            row.extend(t.features.iter().map(|&x| num(x)));
            row.push(num(t.phi));
            row.push(t.label.name().into());
            row.extend(t.class_probabilities.iter().map(|&q| num(q)));
            row
        }),
    )
}

/// Numeric columns of a score report, keyed by instance id. Class columns are
/// read as class codes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreColumns {
    pub ids: Vec<String>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl ScoreColumns {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }
}

pub fn read_scores(path: &Path) -> Result<ScoreColumns> {
    parse_scores(&read_to_string(path)?)
}

pub fn parse_scores(text: &str) -> Result<ScoreColumns> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let malformed = |line: usize, message: String| IoError::Malformed { line, message };
    let headers = reader.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    let id_col = headers.iter().position(|h| h == "id").ok_or_else(|| IoError::MissingColumn("id".into()))?;
    let mut ids = Vec::new();
    let mut columns: Vec<(String, Vec<f64>)> =
        headers.iter().enumerate().filter(|&(i, _)| i != id_col).map(|(_, h)| (h.to_string(), Vec::new())).collect();
    for (r, record) in reader.records().enumerate() {
        let line = r + 2;
        let record = record.map_err(|e| malformed(line, e.to_string()))?;
        ids.push(record[id_col].to_string());
        let cells = record.iter().enumerate().filter(|&(i, _)| i != id_col).map(|(_, c)| c);
        for ((name, values), cell) in columns.iter_mut().zip(cells) {
            let value = match cell.parse::<f64>() {
                Ok(v) => v,
                Err(_) => match cell.parse::<QualityClass>() {
                    Ok(c) => c.code() as f64,
                    Err(_) => {
                        return Err(malformed(
                            line,
                            format!("column `{name}`: `{cell}` is neither a number nor a class"),
                        ))
                    }
                },
            };
            values.push(value);
        }
    }
    Ok(ScoreColumns { ids, columns })
}
