//! Weighted principal components of probability vectors.
//!
//! Probability vectors sum to one, so their covariance always has the all-ones
//! direction in its null space. The decomposition is done inside the
//! sum-zero subspace, which makes the five retained components span it
//! exactly and the transform lossless on the simplex.

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::types::{argmax_first, Dataset, ProbabilityVector, NUM_CLASSES, NUM_THRESHOLDS};

/// Number of retained components.
pub const NUM_FEATURES: usize = NUM_THRESHOLDS;

pub type FeatureVector = [f64; NUM_FEATURES];

/// Which weights the PCA uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PcaWeighting {
    /// The instances' analysis weights.
    #[default]
    Analysis,
    /// Every instance counts once.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaTransform {
    mean: [f64; NUM_CLASSES],
    loadings: [[f64; NUM_CLASSES]; NUM_FEATURES],
    eigenvalues: [f64; NUM_FEATURES],
    discarded_eigenvalue: f64,
}

impl PcaTransform {
    /// Rebuild a transform from stored parts, checking orthonormality.
    pub fn from_parts(
        mean: [f64; NUM_CLASSES],
        loadings: [[f64; NUM_CLASSES]; NUM_FEATURES],
        eigenvalues: [f64; NUM_FEATURES],
    ) -> Result<Self> {
        let finite = mean.iter().chain(loadings.iter().flatten()).chain(eigenvalues.iter()).all(|x| x.is_finite());
        if !finite {
            return Err(Error::NonFiniteInput);
        }
        for i in 0..NUM_FEATURES {
            for j in 0..NUM_FEATURES {
                let dot: f64 = (0..NUM_CLASSES).map(|k| loadings[i][k] * loadings[j][k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-10 {
                    return Err(Error::InvalidArgument("PCA loadings are not orthonormal"));
                }
            }
        }
        Ok(Self { mean, loadings, eigenvalues, discarded_eigenvalue: 0.0 })
    }

    /// Record the variance along the dropped all-ones direction (diagnostic only).
    pub fn with_discarded_eigenvalue(mut self, value: f64) -> Self {
        self.discarded_eigenvalue = value;
        self
    }

    pub fn mean(&self) -> &[f64; NUM_CLASSES] {
        &self.mean
    }

    /// Component loadings, one row per component.
    pub fn loadings(&self) -> &[[f64; NUM_CLASSES]; NUM_FEATURES] {
        &self.loadings
    }

    /// Variances along each retained component, descending.
    pub fn eigenvalues(&self) -> &[f64; NUM_FEATURES] {
        &self.eigenvalues
    }

    /// Weighted variance along the dropped all-ones direction (zero up to rounding).
    pub fn discarded_eigenvalue(&self) -> f64 {
        self.discarded_eigenvalue
    }

    /// `loadings · (p − mean)`.
    pub fn transform(&self, probs: &ProbabilityVector) -> FeatureVector {
        self.transform_raw(probs.as_array())
    }

    /// Same as [`transform`](Self::transform) for an unvalidated vector.
    pub fn transform_raw(&self, p: &[f64; NUM_CLASSES]) -> FeatureVector {
        let mut centered = [0.0; NUM_CLASSES];
        for k in 0..NUM_CLASSES {
            centered[k] = p[k] - self.mean[k];
        }
        self.loadings.map(|row| row.iter().zip(&centered).map(|(a, b)| a * b).sum())
    }

    /// `mean + loadingsᵀ · x`.
    pub fn reconstruct(&self, x: &FeatureVector) -> [f64; NUM_CLASSES] {
        let mut p = self.mean;
        for (row, &xj) in self.loadings.iter().zip(x) {
            for k in 0..NUM_CLASSES {
                p[k] += row[k] * xj;
            }
        }
        p
    }
}

/// Orthonormal basis of `{v : Σ v = 0}` (Helmert contrasts), one column per basis vector.
fn sum_zero_basis() -> Matrix {
    let mut q = Matrix::zeros(NUM_CLASSES, NUM_FEATURES);
    for j in 0..NUM_FEATURES {
        let m = (j + 1) as f64;
        let norm = libm::sqrt(m * (m + 1.0));
        for i in 0..=j {
            q[(i, j)] = 1.0 / norm;
        }
        q[(j + 1, j)] = -m / norm;
    }
    q
}

pub fn fit_pca(dataset: &Dataset, weighting: PcaWeighting) -> Result<PcaTransform> {
    let weight = |w: f64| match weighting {
        PcaWeighting::Analysis => w,
        PcaWeighting::Uniform => 1.0,
    };
    let first = dataset.instances().first().ok_or(Error::EmptyDataset)?.probs;
    if dataset.iter().all(|i| i.probs == first) {
        return Err(Error::DegenerateData);
    }

    let total: f64 = dataset.iter().map(|i| weight(i.weight())).sum();
    let mut mean = [0.0; NUM_CLASSES];
    for inst in dataset {
        let w = weight(inst.weight());
        for (m, p) in mean.iter_mut().zip(inst.probs.as_array()) {
            *m += w * p;
        }
    }
    for m in &mut mean {
        *m /= total;
    }

    let mut cov = Matrix::zeros(NUM_CLASSES, NUM_CLASSES);
    for inst in dataset {
        let w = weight(inst.weight());
        let p = inst.probs.as_array();
        let d: [f64; NUM_CLASSES] = core::array::from_fn(|k| p[k] - mean[k]);
        for a in 0..NUM_CLASSES {
            for b in a..NUM_CLASSES {
                cov[(a, b)] += w * d[a] * d[b];
            }
        }
    }
    for a in 0..NUM_CLASSES {
        for b in a..NUM_CLASSES {
            let v = cov[(a, b)] / total;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }

    let q = sum_zero_basis();
    let reduced = q.transpose().matmul(&cov).matmul(&q);
    let eig = symmetric_eigen(&reduced);
    let full = q.matmul(&eig.vectors);

    let mut loadings = [[0.0; NUM_CLASSES]; NUM_FEATURES];
    for (j, row) in loadings.iter_mut().enumerate() {
        for k in 0..NUM_CLASSES {
            row[k] = full[(k, j)];
        }
        let abs = row.map(f64::abs);
        let lead = argmax_first(&abs, 1e-12);
        if row[lead] < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
    }
    let eigenvalues: [f64; NUM_FEATURES] = core::array::from_fn(|j| {
        let v = eig.values[j];
        if v < 0.0 {
            0.0
        } else {
            v
        }
    });
    let ones = [1.0 / libm::sqrt(NUM_CLASSES as f64); NUM_CLASSES];
    let c1 = cov.mul_vec(&ones);
    let discarded_eigenvalue = ones.iter().zip(&c1).map(|(a, b)| a * b).sum();

    Ok(PcaTransform { mean, loadings, eigenvalues, discarded_eigenvalue })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{LabeledInstance, QualityClass};
    use alloc::format;
    use alloc::vec::Vec;

    fn dataset(points: &[([f64; 6], f64)]) -> Dataset {
        let instances = points
            .iter()
            .enumerate()
            .map(|(i, (p, w))| {
                LabeledInstance::new(format!("{i}"), ProbabilityVector::new(*p).unwrap(), QualityClass::C, *w).unwrap()
            })
            .collect();
        Dataset::new(instances, "").unwrap()
    }

    fn spread() -> Dataset {
        dataset(&[
            ([0.5, 0.2, 0.1, 0.1, 0.05, 0.05], 1.0),
            ([0.1, 0.6, 0.1, 0.1, 0.05, 0.05], 2.0),
            ([0.05, 0.1, 0.5, 0.2, 0.1, 0.05], 0.5),
            ([0.0, 0.05, 0.15, 0.6, 0.1, 0.1], 1.5),
            ([0.02, 0.03, 0.05, 0.2, 0.5, 0.2], 3.0),
            ([0.01, 0.01, 0.03, 0.05, 0.2, 0.7], 0.7),
            ([0.3, 0.3, 0.2, 0.1, 0.05, 0.05], 1.0),
        ])
    }

    #[test]
    fn two_vertex_points() {
        let ds = dataset(&[([1.0, 0.0, 0.0, 0.0, 0.0, 0.0], 1.0), ([0.0, 1.0, 0.0, 0.0, 0.0, 0.0], 1.0)]);
        let t = fit_pca(&ds, PcaWeighting::Analysis).unwrap();
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let want = [s, -s, 0.0, 0.0, 0.0, 0.0];
        for k in 0..6 {
            assert!((t.loadings()[0][k] - want[k]).abs() < 1e-12);
        }
        // Centered points are ±(0.5, −0.5, 0, ...); their projection on the
        // first loading is ±1/√2, so the component variance is 1/2.
        assert!((t.eigenvalues()[0] - 0.5).abs() < 1e-12);
        for j in 1..5 {
            assert!(t.eigenvalues()[j].abs() < 1e-12);
        }
    }

    #[test]
    fn discarded_direction_has_no_variance() {
        let t = fit_pca(&spread(), PcaWeighting::Analysis).unwrap();
        assert!(t.discarded_eigenvalue().abs() < 1e-10);
        assert!(t.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn loadings_orthonormal_and_sign_fixed() {
        let t = fit_pca(&spread(), PcaWeighting::Analysis).unwrap();
        let l = t.loadings();
        for i in 0..5 {
            for j in 0..5 {
                let dot: f64 = (0..6).map(|k| l[i][k] * l[j][k]).sum();
                assert!((dot - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
            let abs = l[i].map(f64::abs);
            assert!(l[i][argmax_first(&abs, 1e-12)] > 0.0);
        }
    }

    #[test]
    fn weight_scale_invariance() {
        let ds = spread();
        let doubled: Vec<_> = ds.iter().map(|i| i.with_weight(2.0 * i.weight()).unwrap()).collect();
        let a = fit_pca(&ds, PcaWeighting::Analysis).unwrap();
        let b = fit_pca(&Dataset::new(doubled, "").unwrap(), PcaWeighting::Analysis).unwrap();
        assert_eq!(a.loadings(), b.loadings());
        for (x, y) in a.mean().iter().zip(b.mean()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn mean_maps_to_origin() {
        let t = fit_pca(&spread(), PcaWeighting::Analysis).unwrap();
        let x = t.transform_raw(t.mean());
        assert!(x.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn feature_variances_equal_eigenvalues() {
        let ds = spread();
        let t = fit_pca(&ds, PcaWeighting::Analysis).unwrap();
        let total = ds.total_weight();
        for j in 0..5 {
            let var: f64 = ds.iter().map(|i| i.weight() * t.transform(&i.probs)[j].powi(2)).sum::<f64>() / total;
            assert!((var - t.eigenvalues()[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn uniform_weighting_ignores_analysis_weights() {
        let ds = spread();
        let ones: Vec<_> = ds.iter().map(|i| i.with_weight(1.0).unwrap()).collect();
        let a = fit_pca(&ds, PcaWeighting::Uniform).unwrap();
        let b = fit_pca(&Dataset::new(ones, "").unwrap(), PcaWeighting::Analysis).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identical_points_are_degenerate() {
        let ds = dataset(&[([0.2, 0.2, 0.2, 0.2, 0.1, 0.1], 1.0); 3]);
        assert_eq!(fit_pca(&ds, PcaWeighting::Analysis), Err(Error::DegenerateData));
    }

    #[test]
    fn deterministic() {
        let a = fit_pca(&spread(), PcaWeighting::Analysis).unwrap();
        let b = fit_pca(&spread(), PcaWeighting::Analysis).unwrap();
        assert_eq!(a, b);
    }
}
