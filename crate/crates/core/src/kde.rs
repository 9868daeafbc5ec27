//! One-dimensional Gaussian kernel density estimates.

use crate::error::{Error, Result};
use crate::normal;

/// Kernel contributions beyond this many bandwidths are dropped (pdf) or counted as 0/1 (cdf).
const CUTOFF: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Silverman's rule, `1.06 * sd * M^(-1/5)`.
    Auto,
    Fixed(f64),
}

impl std::str::FromStr for Bandwidth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Bandwidth::Auto);
        }
        s.parse::<f64>()
            .map(Bandwidth::Fixed)
            .map_err(|_| Error::InvalidInput(format!("bad bandwidth '{s}'")))
    }
}

pub fn silverman(samples: &[f64]) -> f64 {
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    1.06 * var.sqrt() * m.powf(-0.2)
}

#[derive(Debug, Clone)]
pub struct GaussianKde {
    sorted: Vec<f64>,
    h: f64,
}

impl GaussianKde {
    pub fn new(samples: &[f64], bandwidth: Bandwidth) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidInput("KDE needs at least 2 samples".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("KDE samples"));
        }
        let h = match bandwidth {
            Bandwidth::Auto => silverman(samples),
            Bandwidth::Fixed(h) => h,
        };
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidInput(format!("non-positive bandwidth {h}")));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { sorted, h })
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }

    fn window(&self, x: f64) -> (usize, usize) {
        let lo = self.sorted.partition_point(|&s| s < x - CUTOFF * self.h);
        let hi = self.sorted.partition_point(|&s| s <= x + CUTOFF * self.h);
        (lo, hi)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.window(x);
        let s: f64 = self.sorted[lo..hi]
            .iter()
            .map(|&c| normal::pdf((x - c) / self.h))
            .sum();
        s / (self.sorted.len() as f64 * self.h)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.window(x);
        // samples left of the window contribute 1 each, right of it 0
        let s: f64 = lo as f64
            + self.sorted[lo..hi]
                .iter()
                .map(|&c| normal::cdf((x - c) / self.h))
                .sum::<f64>();
        s / self.sorted.len() as f64
    }
}
