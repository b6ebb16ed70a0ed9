//! Inverse-probability weights that make a class-balanced sample stand in for
//! a population of articles, revisions, or quality classes.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::types::{Dataset, QualityClass, NUM_CLASSES};

/// English Wikipedia article counts per class (March 2020).
pub const ARTICLE_COUNTS: [u64; NUM_CLASSES] = [3_359_351, 1_019_038, 235_655, 128_875, 31_808, 7_438];

/// English Wikipedia revision counts per class (March 2020).
pub const REVISION_COUNTS: [u64; NUM_CLASSES] = [12_005_611, 7_828_335, 3_889_639, 3_640_591, 924_468, 365_255];

/// Per-class size of the balanced labeled sample those counts were paired with.
pub const BALANCED_SAMPLE_COUNTS: [u64; NUM_CLASSES] = [4_969, 4_979, 4_988, 4_990, 4_999, 4_995];

/// Class counts of a population, tagged with its unit of analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PopulationCounts {
    pub unit: String,
    counts: [u64; NUM_CLASSES],
}

impl PopulationCounts {
    pub fn new(unit: impl Into<String>, counts: [u64; NUM_CLASSES]) -> Result<Self> {
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::EmptyPopulation);
        }
        Ok(Self { unit: unit.into(), counts })
    }

    pub fn articles() -> Self {
        Self { unit: "article".into(), counts: ARTICLE_COUNTS }
    }

    pub fn revisions() -> Self {
        Self { unit: "revision".into(), counts: REVISION_COUNTS }
    }

    /// Every class equally common: the balanced "quality class" unit.
    pub fn uniform_classes() -> Self {
        Self { unit: "class".into(), counts: [1; NUM_CLASSES] }
    }

    pub fn counts(&self) -> &[u64; NUM_CLASSES] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn proportions(&self) -> [f64; NUM_CLASSES] {
        let total = self.total() as f64;
        self.counts.map(|c| c as f64 / total)
    }
}

/// What to do with a class that has no members in the population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroPopulation {
    #[default]
    Reject,
    /// Give the class weight 0; such instances cannot then be weighted.
    ZeroWeight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    pub unit: String,
    weights: [f64; NUM_CLASSES],
}

impl WeightTable {
    pub fn weights(&self) -> &[f64; NUM_CLASSES] {
        &self.weights
    }

    pub fn get(&self, class: QualityClass) -> f64 {
        self.weights[class.code()]
    }

    /// All-ones table (no reweighting).
    pub fn identity(unit: impl Into<String>) -> Self {
        Self { unit: unit.into(), weights: [1.0; NUM_CLASSES] }
    }
}

/// `weight_k = (pop_k / Σ pop) / (sample_k / Σ sample)`.
pub fn compute_weights(
    sample_counts: &[u64; NUM_CLASSES],
    population: &PopulationCounts,
    zero_population: ZeroPopulation,
) -> Result<WeightTable> {
    if let Some(k) = sample_counts.iter().position(|&c| c == 0) {
        return Err(Error::ZeroSampleClass(QualityClass::ALL[k]));
    }
    let pop_total = population.total();
    if pop_total == 0 {
        return Err(Error::EmptyPopulation);
    }
    if zero_population == ZeroPopulation::Reject {
        if let Some(k) = population.counts.iter().position(|&c| c == 0) {
            return Err(Error::ZeroPopulationClass(QualityClass::ALL[k]));
        }
    }
    let sample_total: u64 = sample_counts.iter().sum();
    let mut weights = [0.0; NUM_CLASSES];
    for k in 0..NUM_CLASSES {
        // Cross-multiplied to keep a single rounding per factor.
        let num = population.counts[k] as f64 * sample_total as f64;
        let den = sample_counts[k] as f64 * pop_total as f64;
        weights[k] = num / den;
    }
    Ok(WeightTable { unit: population.unit.clone(), weights })
}

/// Set every instance's weight to its class weight, preserving order.
pub fn apply_weights(dataset: &Dataset, table: &WeightTable) -> Result<Dataset> {
    let instances = dataset
        .iter()
        .map(|inst| {
            let w = table.get(inst.label);
            if !(w > 0.0) {
                return Err(Error::UncoveredLabel(inst.label));
            }
            inst.with_weight(w)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(instances, dataset.provenance.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{LabeledInstance, ProbabilityVector};
    use alloc::vec;

    const ARTICLE_WEIGHTS: [f64; 6] = [4.23, 1.28, 0.30, 0.16, 0.04, 0.01];
    const REVISION_WEIGHTS: [f64; 6] = [2.52, 1.64, 0.81, 0.76, 0.19, 0.08];

    #[test]
    fn published_article_weights() {
        let t =
            compute_weights(&BALANCED_SAMPLE_COUNTS, &PopulationCounts::articles(), ZeroPopulation::Reject).unwrap();
        for (got, want) in t.weights().iter().zip(ARTICLE_WEIGHTS) {
            assert!((got - want).abs() <= 0.005, "{got} vs {want}");
        }
    }

    #[test]
    fn published_revision_weights() {
        let t =
            compute_weights(&BALANCED_SAMPLE_COUNTS, &PopulationCounts::revisions(), ZeroPopulation::Reject).unwrap();
        for (got, want) in t.weights().iter().zip(REVISION_WEIGHTS) {
            assert!((got - want).abs() <= 0.005, "{got} vs {want}");
        }
    }

    #[test]
    fn proportional_population_gives_unit_weights() {
        let sample = [10, 20, 30, 40, 50, 60];
        let pop = PopulationCounts::new("x", [30, 60, 90, 120, 150, 180]).unwrap();
        let t = compute_weights(&sample, &pop, ZeroPopulation::Reject).unwrap();
        assert_eq!(t.weights(), &[1.0; 6]);
    }

    #[test]
    fn uniform_population_gives_equal_weights_for_balanced_sample() {
        let t = compute_weights(&[7; 6], &PopulationCounts::uniform_classes(), ZeroPopulation::Reject).unwrap();
        assert!(t.weights().iter().all(|&w| w == 1.0));
    }

    #[test]
    fn zero_counts() {
        let pop = PopulationCounts::new("x", [1, 1, 0, 1, 1, 1]).unwrap();
        assert_eq!(
            compute_weights(&[1; 6], &pop, ZeroPopulation::Reject),
            Err(Error::ZeroPopulationClass(QualityClass::C))
        );
        let t = compute_weights(&[1; 6], &pop, ZeroPopulation::ZeroWeight).unwrap();
        assert_eq!(t.get(QualityClass::C), 0.0);
        assert_eq!(
            compute_weights(&[1, 0, 1, 1, 1, 1], &PopulationCounts::articles(), ZeroPopulation::Reject),
            Err(Error::ZeroSampleClass(QualityClass::Start))
        );
        assert_eq!(PopulationCounts::new("x", [0; 6]), Err(Error::EmptyPopulation));
    }

    fn tiny_dataset(labels: &[QualityClass]) -> Dataset {
        let instances = labels
            .iter()
            .enumerate()
            .map(|(i, &c)| LabeledInstance::new(alloc::format!("{i}"), ProbabilityVector::vertex(c), c, 1.0).unwrap())
            .collect();
        Dataset::new(instances, "").unwrap()
    }

    #[test]
    fn apply_sets_class_weights_in_order() {
        let ds = tiny_dataset(&[QualityClass::Stub, QualityClass::Stub]);
        let mut w = [1.0; 6];
        w[0] = 4.23;
        let out = apply_weights(&ds, &WeightTable { unit: "a".into(), weights: w }).unwrap();
        assert!(out.iter().all(|i| i.weight() == 4.23));
        assert_eq!(out.instances()[1].id, "1");

        let ds = tiny_dataset(&QualityClass::ALL);
        assert_eq!(apply_weights(&ds, &WeightTable::identity("a")).unwrap(), ds);
    }

    #[test]
    fn apply_rejects_zero_weight_class() {
        let ds = tiny_dataset(&[QualityClass::C]);
        let mut w = [1.0; 6];
        w[2] = 0.0;
        assert_eq!(
            apply_weights(&ds, &WeightTable { unit: "a".into(), weights: w }),
            Err(Error::UncoveredLabel(QualityClass::C))
        );
    }

    #[test]
    fn weighted_proportions_reproduce_population() {
        let sample = [5u64, 3, 8, 2, 6, 4];
        let labels: Vec<QualityClass> =
            sample.iter().enumerate().flat_map(|(k, &n)| vec![QualityClass::ALL[k]; n as usize]).collect();
        let ds = tiny_dataset(&labels);
        let table = compute_weights(&ds.class_counts(), &PopulationCounts::articles(), ZeroPopulation::Reject).unwrap();
        let weighted = apply_weights(&ds, &table).unwrap();
        let totals = weighted.class_weights();
        let sum: f64 = totals.iter().sum();
        let pop_total: u64 = ARTICLE_COUNTS.iter().sum();
        for k in 0..6 {
            let exact = ARTICLE_COUNTS[k] as f64 / pop_total as f64;
            assert!((totals[k] / sum - exact).abs() < 1e-12);
        }
    }
}
