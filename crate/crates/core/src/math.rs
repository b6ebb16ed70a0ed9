//! Scalar helpers for the logistic link, evaluated in log space where it matters.

/// Logistic CDF `1 / (1 + exp(-z))`.
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + libm::log1p(libm::exp(-z))
    } else {
        libm::log1p(libm::exp(z))
    }
}

/// `log F(z)` for the logistic CDF.
pub fn log_logistic(z: f64) -> f64 {
    -softplus(-z)
}

/// `log(1 - exp(d))` for `d < 0`.
pub fn log1mexp(d: f64) -> f64 {
    if d > -core::f64::consts::LN_2 {
        libm::log(-libm::expm1(d))
    } else {
        libm::log1p(-libm::exp(d))
    }
}

pub fn sq(x: f64) -> f64 {
    x * x
}

pub fn logit(p: f64) -> f64 {
    libm::log(p / (1.0 - p))
}

/// Lower-tail probability `F(b) - F(a)` of the logistic distribution, `a < b`,
/// with either endpoint allowed to be infinite.
pub fn logistic_interval(a: f64, b: f64) -> f64 {
    libm::exp(log_logistic_interval(a, b))
}

/// `log(F(b) - F(a))` for `a < b`.
pub fn log_logistic_interval(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        if b == f64::INFINITY {
            return 0.0;
        }
        return log_logistic(b);
    }
    if b == f64::INFINITY {
        return log_logistic(-a);
    }
    if b <= a {
        return f64::NEG_INFINITY;
    }
    // F(b) - F(a) = F(b) (1 - F(a)) (1 - exp(a - b))
    log_logistic(b) + log_logistic(-a) + log1mexp(a - b)
}

/// Quantile of a sorted slice by linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Pairwise (tree) summation; order of reduction depends only on the length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
