//! Per-instance quality scores, their posterior intervals, predicted classes,
//! the two probability-vector baselines, and the 0–1 display scale.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::features::{FeatureVector, PcaTransform};
use crate::math::quantile_sorted;
use crate::ordinal::{class_probabilities_at, sample_parameters, FittedOrdinalModel};
use crate::types::{argmax_first, Dataset, ProbabilityVector, QualityClass, NUM_CLASSES, NUM_THRESHOLDS};

/// Minimum number of parameter draws for an interval.
pub const MIN_DRAWS: usize = 1000;

/// Probabilities this close to the maximum count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// A fitted ordinal model together with the PCA it was fit on.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityModel {
    pub unit: String,
    pub pca: PcaTransform,
    pub ordinal: FittedOrdinalModel,
}

impl QualityModel {
    pub fn features(&self, probs: &ProbabilityVector) -> FeatureVector {
        self.pca.transform(probs)
    }
}

/// `φ = B · transform(p)`.
pub fn score(probs: &ProbabilityVector, model: &QualityModel) -> Result<f64> {
    let phi = model.ordinal.phi(&model.features(probs));
    if !phi.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    Ok(phi)
}

/// Class with the highest implied probability at score `phi`; ties go to the lower class.
pub fn predict_class_at(phi: f64, thresholds: &[f64; NUM_THRESHOLDS]) -> QualityClass {
    let p = class_probabilities_at(phi, thresholds);
    QualityClass::ALL[argmax_first(&p, TIE_TOLERANCE)]
}

pub fn predict_class(probs: &ProbabilityVector, model: &QualityModel) -> Result<QualityClass> {
    Ok(predict_class_at(score(probs, model)?, model.ordinal.thresholds()))
}

/// Most probable quality class of a classifier output; exact ties go to the lower class.
pub fn mpqc(probs: &ProbabilityVector) -> QualityClass {
    QualityClass::ALL[argmax_first(probs.as_array(), 0.0)]
}

/// `Σ k · p_k` over class codes 0..5.
pub fn evenly_spaced(probs: &ProbabilityVector) -> f64 {
    probs.as_array().iter().enumerate().map(|(k, p)| k as f64 * p).sum()
}

/// Coefficient draws shared across every instance of a batch.
#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    coefficients: Vec<[f64; NUM_THRESHOLDS]>,
    thresholds: Vec<[f64; NUM_THRESHOLDS]>,
}

impl PosteriorDraws {
    pub fn new(model: &FittedOrdinalModel, draws: usize, seed: u64) -> Result<Self> {
        if draws < MIN_DRAWS {
            return Err(Error::InvalidArgument("at least 1000 draws are required for a 95% interval"));
        }
        let sampled = sample_parameters(model, draws, seed)?;
        Ok(Self {
            coefficients: sampled.iter().map(|d| d.coefficients).collect(),
            thresholds: sampled.iter().map(|d| d.thresholds).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// 2.5% and 97.5% quantiles of `φ` across draws.
    pub fn phi_interval(&self, x: &FeatureVector) -> (f64, f64) {
        let mut phis: Vec<f64> = self.coefficients.iter().map(|b| b.iter().zip(x).map(|(c, v)| c * v).sum()).collect();
        interval95(&mut phis)
    }

    /// 95% interval for each threshold.
    pub fn threshold_intervals(&self) -> [(f64, f64); NUM_THRESHOLDS] {
        core::array::from_fn(|k| {
            let mut v: Vec<f64> = self.thresholds.iter().map(|t| t[k]).collect();
            interval95(&mut v)
        })
    }
}

fn interval95(values: &mut [f64]) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    (quantile_sorted(values, 0.025), quantile_sorted(values, 0.975))
}

/// 95% interval on `φ` for one instance.
pub fn score_interval(probs: &ProbabilityVector, model: &QualityModel, draws: usize, seed: u64) -> Result<(f64, f64)> {
    let posterior = PosteriorDraws::new(&model.ordinal, draws, seed)?;
    Ok(posterior.phi_interval(&model.features(probs)))
}

/// Increasing affine map `φ ↦ (φ − low) / (high − low)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationMap {
    pub low: f64,
    pub high: f64,
}

impl NormalizationMap {
    /// Anchor on the extremes of the pooled scores and thresholds.
    pub fn from_pooled(scores: &[f64], thresholds: &[f64]) -> Result<Self> {
        let mut low = f64::INFINITY;
        let mut high = f64::NEG_INFINITY;
        for &v in scores.iter().chain(thresholds) {
            if !v.is_finite() {
                return Err(Error::NonFiniteInput);
            }
            low = low.min(v);
            high = high.max(v);
        }
        if !(high > low) {
            return Err(Error::DegenerateRange);
        }
        Ok(Self { low, high })
    }

    pub fn apply(&self, v: f64) -> f64 {
        (v - self.low) / (self.high - self.low)
    }

    /// Offset and slope of the map as `a + b·φ`.
    pub fn affine(&self) -> (f64, f64) {
        let b = 1.0 / (self.high - self.low);
        (-self.low * b, b)
    }
}

/// Widths of the six class intervals on a normalized scale:
/// `[0, α_1]`, `[α_1, α_2]`, ..., `[α_5, 1]`.
pub fn class_interval_widths(normalized_thresholds: &[f64; NUM_THRESHOLDS]) -> [f64; NUM_CLASSES] {
    core::array::from_fn(|k| {
        let lo = if k == 0 { 0.0 } else { normalized_thresholds[k - 1] };
        let hi = if k == NUM_CLASSES - 1 { 1.0 } else { normalized_thresholds[k] };
        hi - lo
    })
}

/// Scores for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub id: String,
    pub phi: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub phi_norm: f64,
    pub ci_low_norm: f64,
    pub ci_high_norm: f64,
    pub predicted_class: QualityClass,
    pub mpqc: QualityClass,
    pub evenly_spaced: f64,
}

/// One threshold on both scales with its 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSummary {
    pub alpha: f64,
    pub alpha_norm: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub unit: String,
    pub normalization: NormalizationMap,
    pub records: Vec<ScoreRecord>,
    pub thresholds: [ThresholdSummary; NUM_THRESHOLDS],
}

impl ScoreReport {
    pub fn normalized_thresholds(&self) -> [f64; NUM_THRESHOLDS] {
        self.thresholds.map(|t| t.alpha_norm)
    }
}

/// Score every instance of a dataset, in input order.
pub fn score_dataset(dataset: &Dataset, model: &QualityModel, draws: usize, seed: u64) -> Result<ScoreReport> {
    let posterior = PosteriorDraws::new(&model.ordinal, draws, seed)?;
    let thresholds = model.ordinal.thresholds();
    let mut raw = Vec::with_capacity(dataset.len());
    for inst in dataset {
        let x = model.features(&inst.probs);
        let phi = model.ordinal.phi(&x);
        if !phi.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        let (lo, hi) = posterior.phi_interval(&x);
        raw.push((inst, phi, lo, hi));
    }
    let phis: Vec<f64> = raw.iter().map(|r| r.1).collect();
    let norm = NormalizationMap::from_pooled(&phis, thresholds)?;
    let records = raw
        .into_iter()
        .map(|(inst, phi, lo, hi)| ScoreRecord {
            id: inst.id.clone(),
            phi,
            ci_low: lo,
            ci_high: hi,
            phi_norm: norm.apply(phi),
            ci_low_norm: norm.apply(lo),
            ci_high_norm: norm.apply(hi),
            predicted_class: predict_class_at(phi, thresholds),
            mpqc: mpqc(&inst.probs),
            evenly_spaced: evenly_spaced(&inst.probs),
        })
        .collect();
    let intervals = posterior.threshold_intervals();
    let summaries = core::array::from_fn(|k| ThresholdSummary {
        alpha: thresholds[k],
        alpha_norm: norm.apply(thresholds[k]),
        ci_low: intervals[k].0,
        ci_high: intervals[k].1,
    });
    Ok(ScoreReport { unit: model.unit.clone(), normalization: norm, records, thresholds: summaries })
}
