//! Continuous article-quality scores from six-class classifier probabilities.
//!
//! The pipeline: weight a class-balanced labeled sample to a unit of analysis
//! ([`weighting`]), project probability vectors onto five principal
//! components ([`features`]), fit a weighted cumulative-logit model
//! ([`ordinal`]), then score instances on the model's link scale
//! ([`scoring`]) and compare against the argmax and evenly-spaced baselines
//! ([`evaluation`]). [`synth`] generates data from a known model for testing.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod error;
pub mod evaluation;
pub mod features;
pub mod linalg;
pub mod math;
pub mod ordinal;
pub mod pipeline;
pub mod scoring;
pub mod synth;
pub mod types;
pub mod weighting;

pub use error::{Error, Result};
pub use features::{fit_pca, FeatureVector, PcaTransform, PcaWeighting, NUM_FEATURES};
pub use ordinal::{fit, FitOptions, FittedOrdinalModel, Observation, Penalty};
pub use scoring::{QualityModel, ScoreRecord, ScoreReport};
pub use types::{
    validate_instance, Dataset, LabeledInstance, ProbabilityVector, QualityClass, RawRow, Strictness, NUM_CLASSES,
    NUM_THRESHOLDS,
};
pub use weighting::{apply_weights, compute_weights, PopulationCounts, WeightTable, ZeroPopulation};
