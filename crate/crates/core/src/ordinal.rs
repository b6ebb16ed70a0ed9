//! Weighted cumulative-logit (proportional odds) regression.
//!
//! `log[Pr(y ≤ k) / Pr(y > k)] = α_k − φ`, `φ = B·x`. Thresholds are
//! parametrized as `α_1 = θ_1`, `α_k = α_{k−1} + exp(θ_k)`, so every parameter
//! vector in `R^10` maps to strictly increasing thresholds. Parameter vectors
//! are laid out as `(θ_1..θ_5, B_1..B_5)`.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, PcaTransform, NUM_FEATURES};
use crate::linalg::{cholesky, cholesky_solve, spd_inverse, symmetric_eigen, Matrix};
use crate::math::sq;
use crate::math::{log_logistic_interval, logistic, logistic_interval, logit};
use crate::types::{Dataset, ProbabilityVector, QualityClass, NUM_CLASSES, NUM_THRESHOLDS};

/// Number of free parameters: five thresholds and five coefficients.
pub const NUM_PARAMS: usize = NUM_THRESHOLDS + NUM_FEATURES;

pub type ParamVector = [f64; NUM_PARAMS];

/// Map unconstrained `θ` to increasing thresholds.
pub fn thresholds_from_theta(theta: &[f64]) -> [f64; NUM_THRESHOLDS] {
    let mut alpha = [0.0; NUM_THRESHOLDS];
    alpha[0] = theta[0];
    for k in 1..NUM_THRESHOLDS {
        alpha[k] = alpha[k - 1] + libm::exp(theta[k]);
    }
    alpha
}

/// Inverse of [`thresholds_from_theta`]; fails unless `alpha` is strictly increasing.
pub fn theta_from_thresholds(alpha: &[f64; NUM_THRESHOLDS]) -> Result<[f64; NUM_THRESHOLDS]> {
    check_thresholds(alpha)?;
    let mut theta = [0.0; NUM_THRESHOLDS];
    theta[0] = alpha[0];
    for k in 1..NUM_THRESHOLDS {
        theta[k] = libm::log(alpha[k] - alpha[k - 1]);
    }
    Ok(theta)
}

fn check_thresholds(alpha: &[f64; NUM_THRESHOLDS]) -> Result<()> {
    if alpha.iter().any(|a| !a.is_finite()) || alpha.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidThresholds);
    }
    Ok(())
}

/// Jacobian `∂α_j/∂θ_m` of the threshold map (lower triangular).
fn threshold_jacobian(theta: &[f64]) -> [[f64; NUM_THRESHOLDS]; NUM_THRESHOLDS] {
    let mut jac = [[0.0; NUM_THRESHOLDS]; NUM_THRESHOLDS];
    for j in 0..NUM_THRESHOLDS {
        jac[j][0] = 1.0;
        for m in 1..=j {
            jac[j][m] = libm::exp(theta[m]);
        }
    }
    jac
}

/// Probabilities of the six classes at link-scale score `phi`.
pub fn class_probabilities_at(phi: f64, thresholds: &[f64; NUM_THRESHOLDS]) -> [f64; NUM_CLASSES] {
    core::array::from_fn(|k| {
        let (a, b) = interval_bounds(k, phi, thresholds);
        logistic_interval(a, b)
    })
}

/// Link-scale bounds `(α_k − φ, α_{k+1} − φ)` with infinite ends for the extreme classes.
fn interval_bounds(class: usize, phi: f64, alpha: &[f64; NUM_THRESHOLDS]) -> (f64, f64) {
    let a = if class == 0 { f64::NEG_INFINITY } else { alpha[class - 1] - phi };
    let b = if class == NUM_CLASSES - 1 { f64::INFINITY } else { alpha[class] - phi };
    (a, b)
}

/// Prior-like penalty added to the negative log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    None,
    /// Independent Student-t negative log-density on every θ and B component.
    StudentT {
        df: f64,
        scale: f64,
    },
}

impl Default for Penalty {
    fn default() -> Self {
        Penalty::StudentT { df: 3.0, scale: 2.5 }
    }
}

impl Penalty {
    /// Value, first and second derivative for one component.
    fn term(&self, z: f64) -> (f64, f64, f64) {
        match *self {
            Penalty::None => (0.0, 0.0, 0.0),
            Penalty::StudentT { df, scale } => {
                let s2 = df * scale * scale;
                let log_norm = libm::lgamma(0.5 * df) - libm::lgamma(0.5 * (df + 1.0))
                    + 0.5 * libm::log(df * core::f64::consts::PI)
                    + libm::log(scale);
                let q = s2 + z * z;
                let value = log_norm + 0.5 * (df + 1.0) * libm::log1p(z * z / s2);
                let d1 = (df + 1.0) * z / q;
                let d2 = (df + 1.0) * (s2 - z * z) / (q * q);
                (value, d1, d2)
            }
        }
    }
}

/// One row of the regression: features, observed class, analysis weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub features: FeatureVector,
    pub class: QualityClass,
    pub weight: f64,
}

/// Objective value with exact derivatives over `(θ, B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub value: f64,
    pub gradient: ParamVector,
    pub hessian: Matrix,
}

/// Sums over a block of observations in the natural `(α, B)` coordinates.
#[derive(Clone)]
struct Accumulator {
    value: f64,
    grad: ParamVector,
    hess: Option<Matrix>,
    score_outer: Option<Matrix>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Order {
    Value,
    Gradient,
    Hessian,
    /// Hessian plus the outer product of weighted per-observation scores.
    Sandwich,
}

impl Accumulator {
    fn new(order: Order) -> Self {
        Self {
            value: 0.0,
            grad: [0.0; NUM_PARAMS],
            hess: matches!(order, Order::Hessian | Order::Sandwich).then(|| Matrix::zeros(NUM_PARAMS, NUM_PARAMS)),
            score_outer: (order == Order::Sandwich).then(|| Matrix::zeros(NUM_PARAMS, NUM_PARAMS)),
        }
    }

    fn merge(mut self, other: Accumulator) -> Self {
        self.value += other.value;
        for (a, b) in self.grad.iter_mut().zip(other.grad) {
            *a += b;
        }
        if let (Some(h), Some(o)) = (self.hess.as_mut(), other.hess) {
            for i in 0..NUM_PARAMS {
                for j in 0..NUM_PARAMS {
                    h[(i, j)] += o[(i, j)];
                }
            }
        }
        if let (Some(h), Some(o)) = (self.score_outer.as_mut(), other.score_outer) {
            for i in 0..NUM_PARAMS {
                for j in 0..NUM_PARAMS {
                    h[(i, j)] += o[(i, j)];
                }
            }
        }
        self
    }
}

const BLOCK: usize = 256;

fn accumulate_block(
    obs: &[Observation],
    alpha: &[f64; NUM_THRESHOLDS],
    coef: &[f64],
    order: Order,
) -> Result<Accumulator> {
    let mut acc = Accumulator::new(order);
    for o in obs {
        let x = &o.features;
        let phi: f64 = coef.iter().zip(x).map(|(b, v)| b * v).sum();
        if !phi.is_finite() {
            return Err(Error::NonFiniteLikelihood);
        }
        let k = o.class.code();
        let (a, b) = interval_bounds(k, phi, alpha);
        let ll = log_logistic_interval(a, b);
        if !ll.is_finite() {
            return Err(Error::NonFiniteLikelihood);
        }
        let w = o.weight;
        acc.value -= w * ll;
        if order == Order::Value {
            continue;
        }

        // Derivatives of the log-probability with respect to a and b.
        let (ga, gb) = if k == 0 {
            (0.0, logistic(-b))
        } else if k == NUM_CLASSES - 1 {
            (-logistic(a), 0.0)
        } else {
            let gap = -libm::expm1(a - b);
            (-logistic(a) / (logistic(b) * gap), logistic(-b) / (logistic(-a) * gap))
        };
        let lo = (k > 0).then(|| k - 1);
        let hi = (k < NUM_CLASSES - 1).then_some(k);
        if let Some(lo) = lo {
            acc.grad[lo] -= w * ga;
        }
        if let Some(hi) = hi {
            acc.grad[hi] -= w * gb;
        }
        let gphi = ga + gb;
        for j in 0..NUM_FEATURES {
            acc.grad[NUM_THRESHOLDS + j] += w * gphi * x[j];
        }

        if let Some(h) = acc.hess.as_mut() {
            let haa = if lo.is_some() { ga * (1.0 - 2.0 * logistic(a)) - ga * ga } else { 0.0 };
            let hbb = if hi.is_some() { gb * (1.0 - 2.0 * logistic(b)) - gb * gb } else { 0.0 };
            let hab = -ga * gb;
            // Hessian of −w·ℓ.
            if let Some(lo) = lo {
                h[(lo, lo)] -= w * haa;
                let c = w * (haa + hab);
                for j in 0..NUM_FEATURES {
                    h[(lo, NUM_THRESHOLDS + j)] += c * x[j];
                }
            }
            if let Some(hi) = hi {
                h[(hi, hi)] -= w * hbb;
                let c = w * (hab + hbb);
                for j in 0..NUM_FEATURES {
                    h[(hi, NUM_THRESHOLDS + j)] += c * x[j];
                }
            }
            if let (Some(lo), Some(hi)) = (lo, hi) {
                h[(lo, hi)] -= w * hab;
            }
            let cbb = -w * (haa + 2.0 * hab + hbb);
            for i in 0..NUM_FEATURES {
                for j in i..NUM_FEATURES {
                    h[(NUM_THRESHOLDS + i, NUM_THRESHOLDS + j)] += cbb * x[i] * x[j];
                }
            }
        }

        if let Some(s) = acc.score_outer.as_mut() {
            let mut score = [0.0; NUM_PARAMS];
            if let Some(lo) = lo {
                score[lo] = w * ga;
            }
            if let Some(hi) = hi {
                score[hi] = w * gb;
            }
            for j in 0..NUM_FEATURES {
                score[NUM_THRESHOLDS + j] = -w * gphi * x[j];
            }
            for i in 0..NUM_PARAMS {
                if score[i] == 0.0 {
                    continue;
                }
                for j in i..NUM_PARAMS {
                    s[(i, j)] += score[i] * score[j];
                }
            }
        }
    }
    Ok(acc)
}

/// Fixed-shape pairwise reduction over blocks; the result depends only on the input order.
fn accumulate(obs: &[Observation], alpha: &[f64; NUM_THRESHOLDS], coef: &[f64], order: Order) -> Result<Accumulator> {
    if obs.len() <= BLOCK {
        return accumulate_block(obs, alpha, coef, order);
    }
    let blocks = obs.len().div_ceil(BLOCK);
    let mid = (blocks / 2) * BLOCK;
    let left = accumulate(&obs[..mid], alpha, coef, order)?;
    let right = accumulate(&obs[mid..], alpha, coef, order)?;
    Ok(left.merge(right))
}

fn fill_lower(m: &mut Matrix) {
    for i in 0..m.rows() {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
}

/// Full Jacobian of natural coordinates `(α, B)` with respect to `(θ, B)`.
fn natural_jacobian(theta: &[f64]) -> Matrix {
    let jt = threshold_jacobian(theta);
    let mut jac = Matrix::identity(NUM_PARAMS);
    for j in 0..NUM_THRESHOLDS {
        for m in 0..NUM_THRESHOLDS {
            jac[(j, m)] = jt[j][m];
        }
    }
    jac
}

struct Evaluated {
    value: f64,
    gradient: ParamVector,
    hessian: Option<Matrix>,
    /// Score outer product in `(θ, B)` coordinates (data term only).
    score_outer: Option<Matrix>,
}

fn evaluate(obs: &[Observation], params: &ParamVector, penalty: Penalty, order: Order) -> Result<Evaluated> {
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let theta = &params[..NUM_THRESHOLDS];
    let coef = &params[NUM_THRESHOLDS..];
    let alpha = thresholds_from_theta(theta);
    if alpha.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFiniteLikelihood);
    }
    let acc = accumulate(obs, &alpha, coef, order)?;
    let jac = natural_jacobian(theta);

    let mut value = acc.value;
    let mut gradient = [0.0; NUM_PARAMS];
    let mut hessian = None;
    let mut score_outer = None;
    if order != Order::Value {
        // Chain rule: g_θ = Jᵀ g_nat.
        for m in 0..NUM_PARAMS {
            gradient[m] = (0..NUM_PARAMS).map(|j| jac[(j, m)] * acc.grad[j]).sum();
        }
    }
    if let Some(mut h_nat) = acc.hess {
        fill_lower(&mut h_nat);
        let mut h = jac.transpose().matmul(&h_nat).matmul(&jac);
        // Curvature of the threshold map: ∂²α_j/∂θ_m² = exp(θ_m) for 1 ≤ m ≤ j.
        for m in 1..NUM_THRESHOLDS {
            let tail: f64 = acc.grad[m..NUM_THRESHOLDS].iter().sum();
            h[(m, m)] += libm::exp(theta[m]) * tail;
        }
        hessian = Some(h);
    }
    if let Some(mut s_nat) = acc.score_outer {
        fill_lower(&mut s_nat);
        score_outer = Some(jac.transpose().matmul(&s_nat).matmul(&jac));
    }

    for (i, &p) in params.iter().enumerate() {
        let (v, d1, d2) = penalty.term(p);
        value += v;
        gradient[i] += d1;
        if let Some(h) = hessian.as_mut() {
            h[(i, i)] += d2;
        }
    }
    if !value.is_finite() {
        return Err(Error::NonFiniteLikelihood);
    }
    Ok(Evaluated { value, gradient, hessian, score_outer })
}

fn check_observations(obs: &[Observation], min_classes: usize) -> Result<()> {
    let mut present = [false; NUM_CLASSES];
    for o in obs {
        if !(o.weight > 0.0) || !o.weight.is_finite() {
            return Err(Error::InvalidWeight(o.weight));
        }
        if o.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        present[o.class.code()] = true;
    }
    let distinct = present.iter().filter(|&&p| p).count();
    if distinct < min_classes {
        return Err(Error::TooFewClasses(distinct));
    }
    Ok(())
}

/// Weighted negative log-likelihood plus penalty, with exact gradient and Hessian.
pub fn nll_weighted(obs: &[Observation], params: &ParamVector, penalty: Penalty) -> Result<Objective> {
    check_observations(obs, 1)?;
    let e = evaluate(obs, params, penalty, Order::Hessian)?;
    Ok(Objective { value: e.value, gradient: e.gradient, hessian: e.hessian.expect("requested") })
}

/// Objective value only.
pub fn nll_value(obs: &[Observation], params: &ParamVector, penalty: Penalty) -> Result<f64> {
    check_observations(obs, 1)?;
    Ok(evaluate(obs, params, penalty, Order::Value)?.value)
}

/// Summary statistics of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSummary {
    /// Weighted log-likelihood at the estimate (penalty excluded).
    pub loglik: f64,
    pub n: usize,
    /// Kish effective sample size `(Σw)² / Σw²`.
    pub n_effective: f64,
    pub converged: bool,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Estimated ordinal model.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedOrdinalModel {
    coefficients: [f64; NUM_FEATURES],
    thresholds: [f64; NUM_THRESHOLDS],
    covariance: Matrix,
    pub summary: FitSummary,
}

impl FittedOrdinalModel {
    /// Assemble a model from stored parts, validating thresholds and covariance.
    pub fn from_parts(
        coefficients: [f64; NUM_FEATURES],
        thresholds: [f64; NUM_THRESHOLDS],
        covariance: Matrix,
        summary: FitSummary,
    ) -> Result<Self> {
        check_thresholds(&thresholds)?;
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        if covariance.rows() != NUM_PARAMS || covariance.cols() != NUM_PARAMS || !covariance.is_finite() {
            return Err(Error::InvalidArgument("covariance must be a finite 10x10 matrix"));
        }
        if covariance.asymmetry() > 1e-10 * covariance.max_abs().max(1.0) {
            return Err(Error::InvalidArgument("covariance is not symmetric"));
        }
        Ok(Self { coefficients, thresholds, covariance, summary })
    }

    pub fn coefficients(&self) -> &[f64; NUM_FEATURES] {
        &self.coefficients
    }

    pub fn thresholds(&self) -> &[f64; NUM_THRESHOLDS] {
        &self.thresholds
    }

    /// Covariance of `(θ, B)`.
    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    pub fn with_covariance(&self, covariance: Matrix) -> Result<Self> {
        Self::from_parts(self.coefficients, self.thresholds, covariance, self.summary.clone())
    }

    /// `θ` recovered from the thresholds.
    pub fn theta(&self) -> [f64; NUM_THRESHOLDS] {
        theta_from_thresholds(&self.thresholds).expect("validated on construction")
    }

    pub fn params(&self) -> ParamVector {
        let theta = self.theta();
        core::array::from_fn(|i| if i < NUM_THRESHOLDS { theta[i] } else { self.coefficients[i - NUM_THRESHOLDS] })
    }

    /// Covariance of `(α, B)` by the delta method.
    pub fn natural_covariance(&self) -> Matrix {
        let jac = natural_jacobian(&self.theta());
        jac.matmul(&self.covariance).matmul(&jac.transpose())
    }

    /// Standard errors of `(α_1..α_5, B_1..B_5)`.
    pub fn standard_errors(&self) -> ParamVector {
        let cov = self.natural_covariance();
        core::array::from_fn(|i| libm::sqrt(cov[(i, i)].max(0.0)))
    }

    /// Link-scale score `φ = B·x`.
    pub fn phi(&self, x: &FeatureVector) -> f64 {
        self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum()
    }

    pub fn class_probabilities(&self, x: &FeatureVector) -> Result<ProbabilityVector> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let p = class_probabilities_at(self.phi(x), &self.thresholds);
        ProbabilityVector::new(p)
    }
}

/// Fitting controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub penalty: Penalty,
    pub max_iter: usize,
    /// Convergence threshold on the gradient sup-norm.
    pub grad_tol: f64,
    /// Largest admissible `|B_j|·sd(x_j)` before the fit is rejected as separated.
    pub separation_limit: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { penalty: Penalty::default(), max_iter: 500, grad_tol: 1e-8, separation_limit: 50.0 }
    }
}

/// A fit together with the objective value at every iterate.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: FittedOrdinalModel,
    pub trace: Vec<f64>,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Start at `B = 0` and thresholds at the logits of the weighted cumulative class shares.
fn starting_point(obs: &[Observation]) -> ParamVector {
    let mut totals = [0.0; NUM_CLASSES];
    for o in obs {
        totals[o.class.code()] += o.weight;
    }
    let total: f64 = totals.iter().sum();
    let eps = 1e-4 * total / NUM_CLASSES as f64;
    let smoothed = total + NUM_CLASSES as f64 * eps;
    let mut alpha = [0.0; NUM_THRESHOLDS];
    let mut cum = 0.0;
    for k in 0..NUM_THRESHOLDS {
        cum += totals[k] + eps;
        alpha[k] = logit(cum / smoothed);
    }
    let theta = theta_from_thresholds(&alpha).unwrap_or([0.0; NUM_THRESHOLDS]);
    core::array::from_fn(|i| if i < NUM_THRESHOLDS { theta[i] } else { 0.0 })
}

const MAX_STEP: f64 = 5.0;

fn newton_direction(hessian: &Matrix, gradient: &ParamVector) -> ParamVector {
    let scale = (0..NUM_PARAMS).map(|i| hessian[(i, i)].abs()).fold(0.0, f64::max).max(1e-12);
    let mut ridge = 0.0;
    loop {
        let mut h = hessian.clone();
        for i in 0..NUM_PARAMS {
            h[(i, i)] += ridge;
        }
        if let Some(l) = cholesky(&h) {
            let step = cholesky_solve(&l, gradient);
            let mut d: ParamVector = core::array::from_fn(|i| -step[i]);
            let big = sup_norm(&d);
            if big > MAX_STEP {
                for v in &mut d {
                    *v *= MAX_STEP / big;
                }
            }
            return d;
        }
        ridge = if ridge == 0.0 { 1e-10 * scale } else { ridge * 10.0 };
        if ridge > 1e12 * scale {
            return core::array::from_fn(|i| -gradient[i]);
        }
    }
}

fn axpy(p: &ParamVector, t: f64, d: &ParamVector) -> ParamVector {
    core::array::from_fn(|i| p[i] + t * d[i])
}

/// Backtracking Armijo search. Returns the accepted step and its value.
fn line_search(
    obs: &[Observation],
    penalty: Penalty,
    params: &ParamVector,
    value: f64,
    gradient: &ParamVector,
    direction: &ParamVector,
) -> Option<(ParamVector, f64)> {
    let slope: f64 = gradient.iter().zip(direction).map(|(g, d)| g * d).sum();
    if !(slope < 0.0) {
        return None;
    }
    // Near the optimum the predicted decrease drops below the rounding of the
    // objective itself; accept the full step if it does not visibly increase it.
    let noise = 1e-13 * (1.0 + value.abs());
    let mut t = 1.0;
    for _ in 0..60 {
        let trial = axpy(params, t, direction);
        if let Ok(e) = evaluate(obs, &trial, penalty, Order::Value) {
            if e.value <= value + 1e-4 * t * slope || (-slope < noise && e.value <= value + noise) {
                return Some((trial, e.value));
            }
        }
        t *= 0.5;
    }
    None
}

/// BFGS on the inverse Hessian, used when Newton steps stop making progress.
fn quasi_newton(
    obs: &[Observation],
    penalty: Penalty,
    start: ParamVector,
    budget: usize,
    tol: f64,
    trace: &mut Vec<f64>,
) -> Result<(ParamVector, usize)> {
    let mut x = start;
    let mut e = evaluate(obs, &x, penalty, Order::Gradient)?;
    let mut inv = Matrix::identity(NUM_PARAMS).scale(1.0 / (1.0 + sup_norm(&e.gradient)));
    for it in 0..budget {
        if sup_norm(&e.gradient) < tol {
            return Ok((x, it));
        }
        let g = e.gradient;
        let hg = inv.mul_vec(&g);
        let mut d: ParamVector = core::array::from_fn(|i| -hg[i]);
        let big = sup_norm(&d);
        if big > MAX_STEP {
            for v in &mut d {
                *v *= MAX_STEP / big;
            }
        }
        let Some((next, _)) = line_search(obs, penalty, &x, e.value, &g, &d) else {
            return Ok((x, it));
        };
        let ne = evaluate(obs, &next, penalty, Order::Gradient)?;
        let s: ParamVector = core::array::from_fn(|i| next[i] - x[i]);
        let y: ParamVector = core::array::from_fn(|i| ne.gradient[i] - g[i]);
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-12 * libm::sqrt(s.iter().map(|v| v * v).sum::<f64>() * y.iter().map(|v| v * v).sum::<f64>()) {
            let rho = 1.0 / sy;
            let hy = inv.mul_vec(&y);
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..NUM_PARAMS {
                for j in 0..NUM_PARAMS {
                    inv[(i, j)] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        x = next;
        e = ne;
        trace.push(e.value);
    }
    Ok((x, budget))
}

/// Fit on precomputed features.
pub fn fit_observations(obs: &[Observation], options: &FitOptions) -> Result<FitOutcome> {
    check_observations(obs, 2)?;
    let penalty = options.penalty;
    let mut params = starting_point(obs);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut stalled = false;

    let mut current = evaluate(obs, &params, penalty, Order::Hessian)?;
    trace.push(current.value);
    while iterations < options.max_iter {
        if sup_norm(&current.gradient) < options.grad_tol {
            break;
        }
        let hessian = current.hessian.as_ref().expect("requested");
        let direction = newton_direction(hessian, &current.gradient);
        match line_search(obs, penalty, &params, current.value, &current.gradient, &direction) {
            Some((next, _)) => {
                params = next;
                current = evaluate(obs, &params, penalty, Order::Hessian)?;
                trace.push(current.value);
                iterations += 1;
            }
            None => {
                stalled = true;
                break;
            }
        }
    }
    if stalled && iterations < options.max_iter {
        let (x, used) =
            quasi_newton(obs, penalty, params, options.max_iter - iterations, options.grad_tol, &mut trace)?;
        params = x;
        iterations += used;
    }

    let final_eval = evaluate(obs, &params, penalty, Order::Sandwich)?;
    let grad_norm = sup_norm(&final_eval.gradient);
    let converged = grad_norm < options.grad_tol;

    let coefficients: [f64; NUM_FEATURES] = core::array::from_fn(|j| params[NUM_THRESHOLDS + j]);
    check_separation(obs, &coefficients, options.separation_limit)?;

    let hessian = final_eval.hessian.expect("requested");
    let bread = spd_inverse(&hessian).ok_or(Error::SingularHessian)?;
    let meat = final_eval.score_outer.expect("requested");
    let mut covariance = bread.matmul(&meat).matmul(&bread);
    covariance.symmetrize();

    let penalty_value: f64 = params.iter().map(|&p| penalty.term(p).0).sum();
    let sum_w: f64 = obs.iter().map(|o| o.weight).sum();
    let sum_w2: f64 = obs.iter().map(|o| o.weight * o.weight).sum();
    let summary = FitSummary {
        loglik: -(final_eval.value - penalty_value),
        n: obs.len(),
        n_effective: sum_w * sum_w / sum_w2,
        converged,
        grad_norm,
        iterations,
    };
    let thresholds = thresholds_from_theta(&params[..NUM_THRESHOLDS]);
    let model = FittedOrdinalModel::from_parts(coefficients, thresholds, covariance, summary)?;
    Ok(FitOutcome { model, trace })
}

fn check_separation(obs: &[Observation], coef: &[f64; NUM_FEATURES], limit: f64) -> Result<()> {
    let total: f64 = obs.iter().map(|o| o.weight).sum();
    for j in 0..NUM_FEATURES {
        let mean = obs.iter().map(|o| o.weight * o.features[j]).sum::<f64>() / total;
        let var = obs.iter().map(|o| o.weight * sq(o.features[j] - mean)).sum::<f64>() / total;
        let standardized = coef[j] * libm::sqrt(var);
        if standardized.abs() > limit {
            return Err(Error::SeparationDetected { index: j, value: standardized });
        }
    }
    Ok(())
}

/// PCA features, labels and weights of a dataset.
pub fn observations(dataset: &Dataset, pca: &PcaTransform) -> Vec<Observation> {
    dataset
        .iter()
        .map(|inst| Observation { features: pca.transform(&inst.probs), class: inst.label, weight: inst.weight() })
        .collect()
}

/// Fit the ordinal model on the PCA features of a weighted dataset.
pub fn fit(dataset: &Dataset, pca: &PcaTransform, options: &FitOptions) -> Result<FittedOrdinalModel> {
    dataset.require_fittable()?;
    Ok(fit_observations(&observations(dataset, pca), options)?.model)
}

/// One posterior draw of thresholds and coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterDraw {
    pub thresholds: [f64; NUM_THRESHOLDS],
    pub coefficients: [f64; NUM_FEATURES],
}

/// Draws from the normal approximation over `(θ, B)`, mapped back to thresholds.
pub fn sample_parameters(model: &FittedOrdinalModel, count: usize, seed: u64) -> Result<Vec<ParameterDraw>> {
    let eig = symmetric_eigen(model.covariance());
    let min = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = model.covariance().max_abs().max(1.0);
    if min < -1e-8 * scale {
        return Err(Error::CovarianceNotPsd(min));
    }
    let mut factor = Matrix::zeros(NUM_PARAMS, NUM_PARAMS);
    for k in 0..NUM_PARAMS {
        let s = libm::sqrt(eig.values[k].max(0.0));
        for i in 0..NUM_PARAMS {
            factor[(i, k)] = eig.vectors[(i, k)] * s;
        }
    }
    let center = model.params();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(count);
    let mut z = vec![0.0; NUM_PARAMS];
    for _ in 0..count {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let delta = factor.mul_vec(&z);
        if delta.iter().all(|&d| d == 0.0) {
            draws.push(ParameterDraw { thresholds: model.thresholds, coefficients: model.coefficients });
            continue;
        }
        let p: ParamVector = core::array::from_fn(|i| center[i] + delta[i]);
        draws.push(ParameterDraw {
            thresholds: thresholds_from_theta(&p[..NUM_THRESHOLDS]),
            coefficients: core::array::from_fn(|j| p[NUM_THRESHOLDS + j]),
        });
    }
    Ok(draws)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_thresholds() -> [f64; 5] {
        core::array::from_fn(|k| logit((k + 1) as f64 / 6.0))
    }

    fn model(coef: [f64; 5], thresholds: [f64; 5]) -> FittedOrdinalModel {
        FittedOrdinalModel::from_parts(
            coef,
            thresholds,
            Matrix::zeros(10, 10),
            FitSummary { loglik: 0.0, n: 0, n_effective: 0.0, converged: true, grad_norm: 0.0, iterations: 0 },
        )
        .unwrap()
    }

    #[test]
    fn threshold_map_round_trip() {
        let theta = [-1.5, 0.3, -2.0, 0.0, 1.1];
        let alpha = thresholds_from_theta(&theta);
        assert!(alpha.windows(2).all(|w| w[1] > w[0]));
        let back = theta_from_thresholds(&alpha).unwrap();
        for (a, b) in theta.iter().zip(back) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(theta_from_thresholds(&[0.0, 1.0, 1.0, 2.0, 3.0]), Err(Error::InvalidThresholds));
    }

    #[test]
    fn half_at_threshold() {
        let m = model([1.0, 0.0, 0.0, 0.0, 0.0], [-2.0, -1.0, 0.5, 1.0, 2.0]);
        let p = class_probabilities_at(0.5, m.thresholds());
        let below: f64 = p[..3].iter().sum();
        assert!((below - 0.5).abs() < 1e-15);
        let pv = m.class_probabilities(&[0.5, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((pv.as_array()[..3].iter().sum::<f64>() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_model_gives_equal_probabilities() {
        let m = model([0.0; 5], uniform_thresholds());
        for x in [[0.0; 5], [3.0, -1.0, 2.0, 0.5, 9.0]] {
            let p = m.class_probabilities(&x).unwrap();
            for &v in p.as_array() {
                assert!((v - 1.0 / 6.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn far_above_top_threshold_is_fa() {
        let th = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let p = class_probabilities_at(th[4] + 50.0, &th);
        assert!(1.0 - p[5] < 1e-20);
        assert!(p[..5].iter().all(|&v| v < 1e-20));
    }

    #[test]
    fn probabilities_sum_to_one() {
        let th = [-3.0, -0.4, 0.1, 2.0, 2.2];
        for phi in [-40.0, -3.0, 0.0, 0.15, 1.7, 35.0] {
            let s: f64 = class_probabilities_at(phi, &th).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_features_rejected() {
        let m = model([0.0; 5], uniform_thresholds());
        assert_eq!(m.class_probabilities(&[f64::NAN, 0.0, 0.0, 0.0, 0.0]), Err(Error::NonFiniteInput));
    }

    #[test]
    fn single_uniform_observation_costs_log6() {
        let theta = theta_from_thresholds(&uniform_thresholds()).unwrap();
        let params: ParamVector = core::array::from_fn(|i| if i < 5 { theta[i] } else { 0.0 });
        let obs = [Observation { features: [0.3, -0.2, 0.0, 1.0, 0.5], class: QualityClass::GA, weight: 1.0 }];
        let bare = nll_value(&obs, &params, Penalty::None).unwrap();
        assert!((bare - libm::log(6.0)).abs() < 1e-14);

        let penalty = Penalty::default();
        let with = nll_weighted(&obs, &params, penalty).unwrap().value;
        let pen: f64 = params.iter().map(|&p| penalty.term(p).0).sum();
        assert!((with - (libm::log(6.0) + pen)).abs() < 1e-13);
    }

    #[test]
    fn student_t_penalty_matches_density() {
        // t(3) density at 0 with scale 2.5: Γ(2)/(Γ(1.5)·sqrt(3π)·2.5).
        let dens = 1.0 / (libm::exp(libm::lgamma(1.5)) * libm::sqrt(3.0 * core::f64::consts::PI) * 2.5);
        let (v, d1, _) = Penalty::default().term(0.0);
        assert!((v + libm::log(dens)).abs() < 1e-14);
        assert_eq!(d1, 0.0);
    }

    #[test]
    fn zero_covariance_draws_equal_estimate() {
        let m = model([0.5, -0.1, 0.0, 0.2, 0.0], [-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert!(sample_parameters(&m, 0, 1).unwrap().is_empty());
        for d in sample_parameters(&m, 20, 1).unwrap() {
            assert_eq!(&d.thresholds, m.thresholds());
            assert_eq!(&d.coefficients, m.coefficients());
        }
    }

    #[test]
    fn indefinite_covariance_rejected() {
        let mut cov = Matrix::zeros(10, 10);
        cov[(0, 0)] = -1.0;
        let m = model([0.0; 5], [-2.0, -1.0, 0.0, 1.0, 2.0]).with_covariance(cov).unwrap();
        assert!(matches!(sample_parameters(&m, 5, 0), Err(Error::CovarianceNotPsd(_))));
    }

    #[test]
    fn single_class_rejected_before_optimizing() {
        let obs = vec![Observation { features: [0.0; 5], class: QualityClass::B, weight: 1.0 }; 4];
        assert_eq!(fit_observations(&obs, &FitOptions::default()).unwrap_err(), Error::TooFewClasses(1));
    }
}
