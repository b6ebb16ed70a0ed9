//! Accuracy, calibration and correlation between quality measures.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::sq;
use crate::types::{ProbabilityVector, QualityClass, NUM_CLASSES};

fn check_lengths(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    Ok(())
}

fn check_weights(weights: &[f64]) -> Result<()> {
    match weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
        Some(&w) => Err(Error::InvalidWeight(w)),
        None => Ok(()),
    }
}

/// Weighted share of exact matches and of predictions within one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    pub accuracy: f64,
    pub off_by_one: f64,
}

pub fn weighted_accuracy(truth: &[QualityClass], predictions: &[QualityClass], weights: &[f64]) -> Result<Accuracy> {
    check_lengths(truth.len(), predictions.len())?;
    check_lengths(truth.len(), weights.len())?;
    check_weights(weights)?;
    if truth.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    let mut exact = 0.0;
    let mut near = 0.0;
    for ((y, p), &w) in truth.iter().zip(predictions).zip(weights) {
        total += w;
        let gap = y.code().abs_diff(p.code());
        if gap == 0 {
            exact += w;
        }
        if gap <= 1 {
            near += w;
        }
    }
    Ok(Accuracy { accuracy: exact / total, off_by_one: near / total })
}

/// Observed minus predicted share of one class, with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationDiff {
    pub class: QualityClass,
    pub diff: f64,
    pub stderr: f64,
}

/// `diff_k = Σ w_i (1[y_i = k] − p_ik) / Σ w_i`, with a linearized standard
/// error `sqrt(Σ w_i² (d_ik − diff_k)²) / Σ w_i`.
pub fn calibration_by_class(
    truth: &[QualityClass],
    predicted: &[ProbabilityVector],
    weights: &[f64],
) -> Result<[CalibrationDiff; NUM_CLASSES]> {
    check_lengths(truth.len(), predicted.len())?;
    check_lengths(truth.len(), weights.len())?;
    check_weights(weights)?;
    if truth.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let total: f64 = weights.iter().sum();
    let term = |i: usize, k: usize| -> f64 {
        let hit = if truth[i].code() == k { 1.0 } else { 0.0 };
        hit - predicted[i].as_array()[k]
    };
    Ok(core::array::from_fn(|k| {
        let diff = (0..truth.len()).map(|i| weights[i] * term(i, k)).sum::<f64>() / total;
        let ss: f64 = (0..truth.len()).map(|i| sq(weights[i] * (term(i, k) - diff))).sum();
        CalibrationDiff { class: QualityClass::ALL[k], diff, stderr: libm::sqrt(ss) / total }
    }))
}

/// Same diffs as [`calibration_by_class`] with standard errors from a
/// seeded nonparametric bootstrap.
pub fn calibration_bootstrap(
    truth: &[QualityClass],
    predicted: &[ProbabilityVector],
    weights: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<[CalibrationDiff; NUM_CLASSES]> {
    let point = calibration_by_class(truth, predicted, weights)?;
    if replicates < 2 {
        return Err(Error::InvalidArgument("bootstrap needs at least two replicates"));
    }
    let n = truth.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reps = vec![[0.0; NUM_CLASSES]; replicates];
    for rep in reps.iter_mut() {
        let mut num = [0.0; NUM_CLASSES];
        let mut total = 0.0;
        for _ in 0..n {
            let i = rng.random_range(0..n);
            let w = weights[i];
            total += w;
            for (k, slot) in num.iter_mut().enumerate() {
                let hit = if truth[i].code() == k { 1.0 } else { 0.0 };
                *slot += w * (hit - predicted[i].as_array()[k]);
            }
        }
        *rep = num.map(|v| v / total);
    }
    Ok(core::array::from_fn(|k| {
        let mean = reps.iter().map(|r| r[k]).sum::<f64>() / replicates as f64;
        let var = reps.iter().map(|r| sq(r[k] - mean)).sum::<f64>() / (replicates - 1) as f64;
        CalibrationDiff { stderr: libm::sqrt(var), ..point[k] }
    }))
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok(())
}

/// Sample Pearson correlation.
pub fn pearson_r(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a.len(), b.len())?;
    if a.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: a.len() });
    }
    check_finite(a)?;
    check_finite(b)?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::ConstantInput);
    }
    Ok((sab / libm::sqrt(saa * sbb)).clamp(-1.0, 1.0))
}

/// Pair counts behind Kendall's τ-b.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    /// `n(n − 1) / 2`.
    pub pairs: u64,
    /// Concordant minus discordant pairs.
    pub net_concordant: i64,
    /// Pairs tied in the first argument.
    pub tied_a: u64,
    /// Pairs tied in the second argument.
    pub tied_b: u64,
}

impl PairCounts {
    /// τ-b from the counts.
    pub fn tau_b(&self) -> Result<f64> {
        let left = self.pairs - self.tied_a;
        let right = self.pairs - self.tied_b;
        if left == 0 || right == 0 {
            return Err(Error::ConstantInput);
        }
        Ok(self.net_concordant as f64 / libm::sqrt(left as f64 * right as f64))
    }
}

fn tied_pairs(run: u64) -> u64 {
    run * (run.saturating_sub(1)) / 2
}

/// Count concordance in `O(n log n)`: sort by `(a, b)`, then count
/// inversions of `b` with a bottom-up merge sort.
pub fn kendall_pair_counts(a: &[f64], b: &[f64]) -> Result<PairCounts> {
    check_lengths(a.len(), b.len())?;
    if a.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: a.len() });
    }
    check_finite(a)?;
    check_finite(b)?;
    let n = a.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[i].total_cmp(&a[j]).then(b[i].total_cmp(&b[j])));

    let mut tied_a = 0u64;
    let mut tied_ab = 0u64;
    let mut run_a = 1u64;
    let mut run_ab = 1u64;
    for w in idx.windows(2) {
        let (p, q) = (w[0], w[1]);
        if a[p] == a[q] {
            run_a += 1;
            if b[p] == b[q] {
                run_ab += 1;
            } else {
                tied_ab += tied_pairs(run_ab);
                run_ab = 1;
            }
        } else {
            tied_a += tied_pairs(run_a);
            tied_ab += tied_pairs(run_ab);
            run_a = 1;
            run_ab = 1;
        }
    }
    tied_a += tied_pairs(run_a);
    tied_ab += tied_pairs(run_ab);

    // Inversions in b among the (a, b)-sorted order are the discordant pairs.
    let mut ys: Vec<f64> = idx.iter().map(|&i| b[i]).collect();
    let mut buf = ys.clone();
    let mut swaps = 0u64;
    let mut width = 1;
    while width < n {
        let mut start = 0;
        while start < n {
            let mid = (start + width).min(n);
            let end = (start + 2 * width).min(n);
            let (mut i, mut j, mut out) = (start, mid, start);
            while i < mid || j < end {
                if j >= end || (i < mid && ys[i] <= ys[j]) {
                    buf[out] = ys[i];
                    i += 1;
                } else {
                    buf[out] = ys[j];
                    swaps += (mid - i) as u64;
                    j += 1;
                }
                out += 1;
            }
            start = end;
        }
        core::mem::swap(&mut ys, &mut buf);
        width *= 2;
    }

    let mut tied_b = 0u64;
    let mut run_b = 1u64;
    for w in ys.windows(2) {
        if w[0] == w[1] {
            run_b += 1;
        } else {
            tied_b += tied_pairs(run_b);
            run_b = 1;
        }
    }
    tied_b += tied_pairs(run_b);

    let pairs = tied_pairs(n as u64);
    // concordant + discordant = pairs − tied_a − tied_b + tied_ab
    let untied = pairs as i64 - tied_a as i64 - tied_b as i64 + tied_ab as i64;
    let net_concordant = untied - 2 * swaps as i64;
    Ok(PairCounts { pairs, net_concordant, tied_a, tied_b })
}

/// Kendall's τ-b.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64> {
    kendall_pair_counts(a, b)?.tau_b()
}

/// Pairwise Pearson and Kendall correlations among named measures.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub pearson: Vec<Vec<f64>>,
    pub kendall: Vec<Vec<f64>>,
}

pub fn correlation_matrix(measures: &[(String, Vec<f64>)]) -> Result<CorrelationMatrix> {
    let m = measures.len();
    if let Some(first) = measures.first() {
        for (_, v) in measures {
            check_lengths(first.1.len(), v.len())?;
        }
    }
    let mut pearson = vec![vec![1.0; m]; m];
    let mut kendall = vec![vec![1.0; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let r = pearson_r(&measures[i].1, &measures[j].1)?;
            let t = kendall_tau(&measures[i].1, &measures[j].1)?;
            pearson[i][j] = r;
            pearson[j][i] = r;
            kendall[i][j] = t;
            kendall[j][i] = t;
        }
    }
    Ok(CorrelationMatrix { names: measures.iter().map(|(n, _)| n.clone()).collect(), pearson, kendall })
}

/// Accuracy of one model under one unit of analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub unit: String,
    pub model: String,
    pub accuracy: Accuracy,
}

/// Calibration of one model under one unit of analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationPanel {
    pub unit: String,
    pub model: String,
    pub diffs: [CalibrationDiff; NUM_CLASSES],
}

/// Everything the evaluation step reports.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvaluationReport {
    pub accuracy: Vec<AccuracyRow>,
    pub calibration: Vec<CalibrationPanel>,
    pub correlations: Option<CorrelationMatrix>,
}
