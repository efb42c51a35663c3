//! Small numeric helpers shared by the modules.

use std::f64::consts::PI;

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (denominator `n - 1`). Zero for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    sample_variance(xs).sqrt()
}

/// Quantile of already-sorted data with linear interpolation between order
/// statistics (the default "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(xs: &[f64], p: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    quantile_sorted(&v, p)
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Log density of `Normal(mu, sd)` at `x`.
pub fn normal_logpdf(x: f64, mu: f64, sd: f64) -> f64 {
    let z = (x - mu) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * LN_2PI
}

/// Log density of `InverseGamma(shape, scale)` at `x > 0`.
pub fn inv_gamma_logpdf(x: f64, shape: f64, scale: f64) -> f64 {
    shape * scale.ln() - statrs::function::gamma::ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
}

/// `ln Φ(x)` for the standard normal CDF.
pub fn ln_normal_cdf(x: f64) -> f64 {
    if x < -30.0 {
        // Asymptotic expansion; erfc underflows out here.
        let x2 = x * x;
        return -0.5 * x2 - (-x).ln() - 0.5 * (2.0 * PI).ln() + (1.0 - 1.0 / x2).ln();
    }
    (0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)).ln()
}

/// `φ(x) / Φ(x)`, the derivative of `ln Φ(x)`.
pub fn normal_hazard_ratio(x: f64) -> f64 {
    if x < -30.0 {
        // Mills-ratio asymptotics.
        let x2 = x * x;
        return -x / (1.0 - 1.0 / x2);
    }
    let pdf = (-0.5 * x * x - 0.5 * LN_2PI).exp();
    pdf / (0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2))
}
