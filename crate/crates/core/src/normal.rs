//! Scalar Gaussian helpers.

use std::f64::consts::FRAC_1_SQRT_2;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF, accurate in both tails.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Density of N(mu, sigma^2) at x.
#[inline]
pub fn pdf_with(x: f64, mu: f64, sigma: f64) -> f64 {
    pdf((x - mu) / sigma) / sigma
}

/// CDF of N(mu, sigma^2) at x. A zero sigma is a point mass at mu.
#[inline]
pub fn cdf_with(x: f64, mu: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        if x > mu {
            1.0
        } else {
            0.0
        }
    } else {
        cdf((x - mu) / sigma)
    }
}
