//! Domain types: ordinal quality classes, probability vectors, labeled instances.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Number of ordinal quality levels.
pub const NUM_CLASSES: usize = 6;

/// Number of thresholds (and of PCA features) in the ordinal model.
pub const NUM_THRESHOLDS: usize = NUM_CLASSES - 1;

/// Tolerance on `|sum(p) - 1|` accepted before renormalizing.
pub const SUM_TOLERANCE: f64 = 1e-6;

/// Wikipedia article assessment level, ordered from worst to best.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QualityClass {
    Stub = 0,
    Start = 1,
    C = 2,
    B = 3,
    GA = 4,
    FA = 5,
}

impl QualityClass {
    pub const ALL: [QualityClass; NUM_CLASSES] =
        [QualityClass::Stub, QualityClass::Start, QualityClass::C, QualityClass::B, QualityClass::GA, QualityClass::FA];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            QualityClass::Stub => "Stub",
            QualityClass::Start => "Start",
            QualityClass::C => "C",
            QualityClass::B => "B",
            QualityClass::GA => "GA",
            QualityClass::FA => "FA",
        }
    }

    /// Lower-case key used in column names (`p_stub`, ..., `p_fa`).
    pub fn key(self) -> &'static str {
        match self {
            QualityClass::Stub => "stub",
            QualityClass::Start => "start",
            QualityClass::C => "c",
            QualityClass::B => "b",
            QualityClass::GA => "ga",
            QualityClass::FA => "fa",
        }
    }
}

impl fmt::Display for QualityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QualityClass {
    type Err = Error;

    /// Accepts the canonical names case-insensitively, with an optional
    /// `-class` suffix (`C-class`, `stub`, `fa`). `A`/`A-class` is rejected.
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        let lower = trimmed.to_ascii_lowercase();
        let base = lower.strip_suffix("-class").unwrap_or(&lower);
        let class = match base {
            "stub" => QualityClass::Stub,
            "start" => QualityClass::Start,
            "c" => QualityClass::C,
            "b" => QualityClass::B,
            "ga" => QualityClass::GA,
            "fa" => QualityClass::FA,
            _ => return Err(Error::UnknownLabel(trimmed.to_string())),
        };
        Ok(class)
    }
}

/// A point on the 6-class probability simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityVector([f64; NUM_CLASSES]);

impl ProbabilityVector {
    /// Validates and renormalizes so the components sum to 1.
    pub fn new(p: [f64; NUM_CLASSES]) -> Result<Self> {
        for (index, &value) in p.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteProbability { index });
            }
            if value < 0.0 {
                return Err(Error::NegativeProbability { index, value });
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::SumOutOfTolerance { sum });
        }
        let mut q = p.map(|x| x / sum);
        close_sum(&mut q);
        Ok(Self(q))
    }

    /// Uniform distribution over the six classes.
    pub fn uniform() -> Self {
        Self([1.0 / NUM_CLASSES as f64; NUM_CLASSES])
    }

    /// Point mass on one class.
    pub fn vertex(class: QualityClass) -> Self {
        let mut p = [0.0; NUM_CLASSES];
        p[class.code()] = 1.0;
        Self(p)
    }

    pub fn as_array(&self) -> &[f64; NUM_CLASSES] {
        &self.0
    }

    pub fn get(&self, class: QualityClass) -> f64 {
        self.0[class.code()]
    }
}

/// Adjust by rounding-sized amounts so the left-to-right sum is exactly one.
///
/// With `rest` the sum of the first five entries, `rest + fl(1 − rest)` is
/// exactly one for any `rest` in `[0, 1]`; when rounding pushed `rest` above one,
/// its largest entry is first stepped down an ulp at a time.
fn close_sum(q: &mut [f64; NUM_CLASSES]) {
    let last = NUM_CLASSES - 1;
    if q.iter().sum::<f64>() == 1.0 {
        return;
    }
    let top = argmax_first(&q[..last], 0.0);
    loop {
        let rest: f64 = q[..last].iter().sum();
        if rest <= 1.0 {
            q[last] = 1.0 - rest;
            break;
        }
        q[top] = q[top].next_down();
    }
    debug_assert_eq!(q.iter().sum::<f64>(), 1.0);
}

/// Index of the largest entry; entries within `tie` of the maximum resolve to
/// the lowest index.
pub(crate) fn argmax_first(values: &[f64], tie: f64) -> usize {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values.iter().position(|&v| v >= max - tie).unwrap_or(0)
}

/// Unvalidated row as it arrives from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub id: String,
    pub probs: [f64; NUM_CLASSES],
    pub label: String,
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInstance {
    pub id: String,
    pub probs: ProbabilityVector,
    pub label: QualityClass,
    weight: f64,
}

impl LabeledInstance {
    pub fn new(id: impl Into<String>, probs: ProbabilityVector, label: QualityClass, weight: f64) -> Result<Self> {
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::InvalidWeight(weight));
        }
        Ok(Self { id: id.into(), probs, label, weight })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn with_weight(&self, weight: f64) -> Result<Self> {
        Self::new(self.id.clone(), self.probs, self.label, weight)
    }
}

/// Validate one raw row into a labeled instance.
pub fn validate_instance(raw: &RawRow) -> Result<LabeledInstance> {
    let probs = ProbabilityVector::new(raw.probs)?;
    let label: QualityClass = raw.label.parse()?;
    LabeledInstance::new(raw.id.clone(), probs, label, raw.weight.unwrap_or(1.0))
}

/// Row-level failure recorded during lenient ingestion (rows are 1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub row: usize,
    pub error: Error,
}

/// How bulk validation treats invalid rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    /// Any invalid row fails the whole batch.
    #[default]
    Strict,
    /// Invalid rows are dropped and reported.
    Lenient,
}

/// Validate rows in order. In strict mode every failure is still collected
/// so the caller can report all of them at once.
pub fn validate_rows<'a, I>(
    rows: I,
    mode: Strictness,
) -> core::result::Result<(Vec<LabeledInstance>, Vec<RowError>), Vec<RowError>>
where
    I: IntoIterator<Item = &'a RawRow>,
{
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (i, raw) in rows.into_iter().enumerate() {
        match validate_instance(raw) {
            Ok(inst) => kept.push(inst),
            Err(error) => dropped.push(RowError { row: i + 1, error }),
        }
    }
    if mode == Strictness::Strict && !dropped.is_empty() {
        return Err(dropped);
    }
    Ok((kept, dropped))
}

/// Ordered collection of labeled instances.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    instances: Vec<LabeledInstance>,
    pub provenance: String,
}

impl Dataset {
    pub fn new(instances: Vec<LabeledInstance>, provenance: impl Into<String>) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self { instances, provenance: provenance.into() })
    }

    pub fn instances(&self) -> &[LabeledInstance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, LabeledInstance> {
        self.instances.iter()
    }

    /// Unweighted number of instances per class.
    pub fn class_counts(&self) -> [u64; NUM_CLASSES] {
        let mut counts = [0u64; NUM_CLASSES];
        for inst in &self.instances {
            counts[inst.label.code()] += 1;
        }
        counts
    }

    /// Total analysis weight per class.
    pub fn class_weights(&self) -> [f64; NUM_CLASSES] {
        let mut totals = [0.0; NUM_CLASSES];
        for inst in &self.instances {
            totals[inst.label.code()] += inst.weight;
        }
        totals
    }

    pub fn total_weight(&self) -> f64 {
        self.instances.iter().map(|i| i.weight).sum()
    }

    /// Check the dataset can support an ordinal fit.
    pub fn require_fittable(&self) -> Result<()> {
        let distinct = self.class_counts().iter().filter(|&&c| c > 0).count();
        if distinct < 2 {
            return Err(Error::TooFewClasses(distinct));
        }
        Ok(())
    }

    pub fn into_instances(self) -> Vec<LabeledInstance> {
        self.instances
    }

    /// Split into (first `k`, rest) preserving order.
    pub fn split_at(&self, k: usize) -> Result<(Dataset, Dataset)> {
        let (a, b) = self.instances.split_at(k.min(self.instances.len()));
        Ok((Dataset::new(a.to_vec(), self.provenance.clone())?, Dataset::new(b.to_vec(), self.provenance.clone())?))
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a LabeledInstance;
    type IntoIter = core::slice::Iter<'a, LabeledInstance>;
    fn into_iter(self) -> Self::IntoIter {
        self.instances.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    fn raw(id: &str, p: [f64; 6], label: &str) -> RawRow {
        RawRow { id: id.into(), probs: p, label: label.into(), weight: None }
    }

    #[test]
    fn vertex_stub_is_code_zero() {
        let inst = validate_instance(&raw("a", [1.0, 0.0, 0.0, 0.0, 0.0, 0.0], "Stub")).unwrap();
        assert_eq!(inst.label.code(), 0);
        assert_eq!(inst.weight(), 1.0);
    }

    #[test]
    fn exact_simplex_point_accepted() {
        let inst = validate_instance(&raw("b", [0.1, 0.3, 0.4, 0.075, 0.075, 0.05], "C")).unwrap();
        assert_eq!(inst.label, QualityClass::C);
        assert_eq!(inst.probs.as_array().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn short_vector_rejected() {
        let err = validate_instance(&raw("c", [0.1, 0.3, 0.4, 0.075, 0.075, 0.0], "C")).unwrap_err();
        match err {
            Error::SumOutOfTolerance { sum } => assert!((sum - 0.95).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_and_unknown_rejected() {
        assert!(matches!(
            validate_instance(&raw("d", [-0.1, 0.3, 0.4, 0.2, 0.1, 0.1], "C")),
            Err(Error::NegativeProbability { index: 0, .. })
        ));
        for bad in ["A-class", "A", "unassessed", "", "List"] {
            assert!(matches!(
                validate_instance(&raw("e", [1.0, 0.0, 0.0, 0.0, 0.0, 0.0], bad)),
                Err(Error::UnknownLabel(_))
            ));
        }
    }

    #[test]
    fn near_simplex_is_renormalized() {
        let p = [0.2, 0.2, 0.2, 0.2, 0.1, 0.1 + 5e-7];
        let v = ProbabilityVector::new(p).unwrap();
        assert_eq!(v.as_array().iter().sum::<f64>(), 1.0);
        assert!(ProbabilityVector::new([0.2, 0.2, 0.2, 0.2, 0.1, 0.1 + 2e-6]).is_err());
    }

    #[test]
    fn label_aliases_and_round_trip() {
        for class in QualityClass::ALL {
            assert_eq!(class.name().parse::<QualityClass>().unwrap(), class);
            assert_eq!(format!("{}", class.name().parse::<QualityClass>().unwrap()), class.name());
        }
        assert_eq!("C-class".parse::<QualityClass>().unwrap(), QualityClass::C);
        assert_eq!(" fa ".parse::<QualityClass>().unwrap(), QualityClass::FA);
    }

    #[test]
    fn weight_must_be_positive() {
        let p = ProbabilityVector::uniform();
        assert!(LabeledInstance::new("x", p, QualityClass::B, 0.0).is_err());
        assert!(LabeledInstance::new("x", p, QualityClass::B, f64::NAN).is_err());
        assert!(LabeledInstance::new("x", p, QualityClass::B, f64::INFINITY).is_err());
    }

    #[test]
    fn lenient_rows_report_drops() {
        let rows = vec![
            raw("a", [1.0, 0.0, 0.0, 0.0, 0.0, 0.0], "Stub"),
            raw("b", [0.5, 0.0, 0.0, 0.0, 0.0, 0.0], "Stub"),
            raw("c", [0.0, 0.0, 0.0, 0.0, 0.0, 1.0], "A-class"),
        ];
        let (kept, dropped) = validate_rows(&rows, Strictness::Lenient).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(dropped.iter().map(|d| d.row).collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(validate_rows(&rows, Strictness::Strict).unwrap_err().len(), 2);
    }

    #[test]
    fn fittable_needs_two_labels() {
        let p = ProbabilityVector::uniform();
        let one = Dataset::new(vec![LabeledInstance::new("a", p, QualityClass::B, 1.0).unwrap()], "").unwrap();
        assert_eq!(one.require_fittable(), Err(Error::TooFewClasses(1)));
        assert_eq!(Dataset::new(vec![], ""), Err(Error::EmptyDataset));
    }
}
