//! End-to-end steps shared by the CLI and the tests.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Result;
use crate::evaluation::{
    calibration_bootstrap, calibration_by_class, weighted_accuracy, AccuracyRow, CalibrationDiff, CalibrationPanel,
    EvaluationReport,
};
use crate::features::{fit_pca, PcaWeighting};
use crate::ordinal::{fit, FitOptions};
use crate::scoring::{mpqc, predict_class_at, QualityModel};
use crate::types::{Dataset, ProbabilityVector, QualityClass, NUM_CLASSES};
use crate::weighting::{apply_weights, compute_weights, PopulationCounts, ZeroPopulation};

/// How a model is calibrated and fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub population: PopulationCounts,
    /// Sample class counts for the weights; the fitting data's own counts when `None`.
    pub sample_counts: Option<[u64; NUM_CLASSES]>,
    pub zero_population: ZeroPopulation,
    pub pca_weighting: PcaWeighting,
    pub options: FitOptions,
}

impl ModelSpec {
    pub fn new(population: PopulationCounts) -> Self {
        Self {
            population,
            sample_counts: None,
            zero_population: ZeroPopulation::Reject,
            pca_weighting: PcaWeighting::Analysis,
            options: FitOptions::default(),
        }
    }
}

/// Reweight a dataset so it represents `population`.
pub fn weight_for_population(
    dataset: &Dataset,
    population: &PopulationCounts,
    sample_counts: Option<[u64; NUM_CLASSES]>,
    zero_population: ZeroPopulation,
) -> Result<Dataset> {
    let counts = sample_counts.unwrap_or_else(|| dataset.class_counts());
    let table = compute_weights(&counts, population, zero_population)?;
    apply_weights(dataset, &table)
}

/// Weight, project and fit.
pub fn fit_quality_model(dataset: &Dataset, spec: &ModelSpec) -> Result<QualityModel> {
    dataset.require_fittable()?;
    let weighted = weight_for_population(dataset, &spec.population, spec.sample_counts, spec.zero_population)?;
    let pca = fit_pca(&weighted, spec.pca_weighting)?;
    let ordinal = fit(&weighted, &pca, &spec.options)?;
    Ok(QualityModel { unit: spec.population.unit.clone(), pca, ordinal })
}

/// Name used for the classifier's own argmax in reports.
pub const MPQC_NAME: &str = "MPQC";

/// Bootstrap settings for calibration standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bootstrap {
    pub replicates: usize,
    pub seed: u64,
}

fn calibration(
    truth: &[QualityClass],
    probs: &[ProbabilityVector],
    weights: &[f64],
    bootstrap: Option<Bootstrap>,
) -> Result<[CalibrationDiff; NUM_CLASSES]> {
    match bootstrap {
        None => calibration_by_class(truth, probs, weights),
        Some(b) => calibration_bootstrap(truth, probs, weights, b.replicates, b.seed),
    }
}

/// Accuracy and calibration of every model, plus the classifier argmax, on a
/// dataset whose weights already represent `unit`. Standard errors are
/// linearized unless `bootstrap` is given.
pub fn evaluate_models(
    weighted: &Dataset,
    unit: &str,
    models: &[(String, QualityModel)],
    bootstrap: Option<Bootstrap>,
) -> Result<EvaluationReport> {
    let truth: Vec<QualityClass> = weighted.iter().map(|i| i.label).collect();
    let weights: Vec<f64> = weighted.iter().map(|i| i.weight()).collect();
    let mut report = EvaluationReport::default();
    for (name, model) in models {
        let mut predicted = Vec::with_capacity(weighted.len());
        let mut probs = Vec::with_capacity(weighted.len());
        for inst in weighted {
            let x = model.features(&inst.probs);
            let phi = model.ordinal.phi(&x);
            predicted.push(predict_class_at(phi, model.ordinal.thresholds()));
            probs.push(model.ordinal.class_probabilities(&x)?);
        }
        report.accuracy.push(AccuracyRow {
            unit: unit.into(),
            model: name.clone(),
            accuracy: weighted_accuracy(&truth, &predicted, &weights)?,
        });
        report.calibration.push(CalibrationPanel {
            unit: unit.into(),
            model: name.clone(),
            diffs: calibration(&truth, &probs, &weights, bootstrap)?,
        });
    }
    let argmax: Vec<QualityClass> = weighted.iter().map(|i| mpqc(&i.probs)).collect();
    let raw: Vec<ProbabilityVector> = weighted.iter().map(|i| i.probs).collect();
    report.accuracy.push(AccuracyRow {
        unit: unit.into(),
        model: MPQC_NAME.into(),
        accuracy: weighted_accuracy(&truth, &argmax, &weights)?,
    });
    report.calibration.push(CalibrationPanel {
        unit: unit.into(),
        model: MPQC_NAME.into(),
        diffs: calibration(&truth, &raw, &weights, bootstrap)?,
    });
    Ok(report)
}
