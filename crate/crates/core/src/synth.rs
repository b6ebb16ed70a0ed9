//! Synthetic data from a known ordinal model.
//!
//! For each instance: latent features `x ~ N(0, I_5)`, true class
//! probabilities from the cumulative-logit law at `(α*, B*)`, a label drawn
//! from them, and a classifier-like output `p ~ Dirichlet(κ · probabilities)`.
//! A single ChaCha8 stream seeded with `seed` drives everything, in that order.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, NUM_FEATURES};
use crate::ordinal::{class_probabilities_at, Observation};
use crate::types::{Dataset, LabeledInstance, ProbabilityVector, QualityClass, NUM_CLASSES, NUM_THRESHOLDS};

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub thresholds: [f64; NUM_THRESHOLDS],
    pub coefficients: [f64; NUM_FEATURES],
    /// Dirichlet concentration of the noisy probability vectors.
    pub kappa: f64,
    pub n: usize,
    pub seed: u64,
    /// Use these features for every instance instead of drawing them.
    pub fixed_features: Option<FeatureVector>,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.thresholds.iter().any(|t| !t.is_finite()) || self.thresholds.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSpec("thresholds must be finite and strictly increasing"));
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSpec("coefficients must be finite"));
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::InvalidSpec("kappa must be positive and finite"));
        }
        if self.n == 0 {
            return Err(Error::InvalidSpec("n must be at least 1"));
        }
        if let Some(x) = self.fixed_features {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec("fixed features must be finite"));
            }
        }
        Ok(())
    }
}

/// Latent quantities behind one generated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthRecord {
    pub id: alloc::string::String,
    pub features: FeatureVector,
    pub phi: f64,
    pub class_probabilities: [f64; NUM_CLASSES],
    pub label: QualityClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub dataset: Dataset,
    pub truth: Vec<TruthRecord>,
}

impl Synthetic {
    /// Regression rows on the true latent features, with the dataset's weights.
    pub fn true_observations(&self) -> Vec<Observation> {
        self.truth
            .iter()
            .zip(self.dataset.iter())
            .map(|(t, inst)| Observation { features: t.features, class: t.label, weight: inst.weight() })
            .collect()
    }
}

fn draw_label(rng: &mut ChaCha8Rng, probs: &[f64; NUM_CLASSES]) -> QualityClass {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return QualityClass::ALL[k];
        }
    }
    // u landed in the rounding gap above the last cumulative sum.
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(NUM_CLASSES - 1);
    QualityClass::ALL[last]
}

fn draw_dirichlet(rng: &mut ChaCha8Rng, kappa: f64, probs: &[f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let mut g = [0.0; NUM_CLASSES];
    for (slot, &p) in g.iter_mut().zip(probs) {
        let shape = kappa * p;
        if shape > 0.0 {
            // Shape is positive and finite, so construction cannot fail.
            let gamma = Gamma::new(shape, 1.0).expect("valid gamma shape");
            *slot = gamma.sample(rng);
        }
    }
    let total: f64 = g.iter().sum();
    if !(total > 0.0) {
        // Every component underflowed; fall back to the mean.
        return *probs;
    }
    g.map(|v| v / total)
}

pub fn generate(spec: &GeneratorSpec) -> Result<Synthetic> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let width = format!("{}", spec.n).len();
    let mut instances = Vec::with_capacity(spec.n);
    let mut truth = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let features: FeatureVector = match spec.fixed_features {
            Some(x) => x,
            None => core::array::from_fn(|_| StandardNormal.sample(&mut rng)),
        };
        let phi: f64 = spec.coefficients.iter().zip(&features).map(|(b, x)| b * x).sum();
        let class_probabilities = class_probabilities_at(phi, &spec.thresholds);
        let label = draw_label(&mut rng, &class_probabilities);
        let noisy = draw_dirichlet(&mut rng, spec.kappa, &class_probabilities);
        let probs = ProbabilityVector::new(noisy)?;
        let id = format!("syn{:0width$}", i + 1, width = width);
        instances.push(LabeledInstance::new(id.clone(), probs, label, 1.0)?);
        truth.push(TruthRecord { id, features, phi, class_probabilities, label });
    }
    let provenance = format!(
        "synthetic n={} kappa={} seed={} thresholds={:?} coefficients={:?}",
        spec.n, spec.kappa, spec.seed, spec.thresholds, spec.coefficients
    );
    Ok(Synthetic { dataset: Dataset::new(instances, provenance)?, truth })
}
