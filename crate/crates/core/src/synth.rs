//! Synthetic problems with controlled correlation between output sums.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::SumSamples;
use crate::{normal, rng, theory};

/// Two-neuron problem: the correct sum has mean `mu_correct`, the incorrect one mean 0,
/// both std `sigma`, with correlation `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinaryGaussianSpec {
    pub mu_correct: f64,
    pub sigma: f64,
    pub rho: f64,
    pub samples: usize,
    pub seed: u64,
}

impl BinaryGaussianSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.mu_correct.is_finite() || !self.sigma.is_finite() || !self.rho.is_finite() {
            return Err(Error::NonFinite("binary spec"));
        }
        if self.sigma <= 0.0 {
            return Err(Error::InvalidInput(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if self.rho.abs() >= 1.0 {
            return Err(Error::InvalidInput(format!("|rho| must be < 1, got {}", self.rho)));
        }
        if self.samples == 0 {
            return Err(Error::InvalidInput("need at least one sample".into()));
        }
        Ok(())
    }

    /// `Phi(mu / sqrt(2 sigma^2 (1 - rho)))`.
    pub fn closed_form(&self) -> f64 {
        normal::cdf(self.mu_correct / (2.0 * self.sigma * self.sigma * (1.0 - self.rho)).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinaryResult {
    pub empirical: f64,
    pub stderr: f64,
    /// Independent-Gaussian prediction (ignores `rho`).
    pub eq2: f64,
    pub closed_form: f64,
}

pub fn simulate_binary(spec: &BinaryGaussianSpec) -> Result<BinaryResult> {
    spec.validate()?;
    let mut r = rng::rng(spec.seed);
    let (mu, s, rho) = (spec.mu_correct, spec.sigma, spec.rho);
    let c = (1.0 - rho * rho).sqrt();
    let mut hits = 0usize;
    for _ in 0..spec.samples {
        let z0: f64 = r.sample(StandardNormal);
        let z1: f64 = r.sample(StandardNormal);
        let correct = mu + s * z0;
        let wrong = s * (rho * z0 + c * z1);
        if correct > wrong {
            hits += 1;
        }
    }
    let m = spec.samples as f64;
    let a = hits as f64 / m;
    Ok(BinaryResult {
        empirical: a,
        stderr: (a * (1.0 - a) / m).sqrt(),
        eq2: theory::predict_independent(&[mu, 0.0], &[s, s], 0)?,
        closed_form: spec.closed_form(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub mus: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub rhos: Vec<f64>,
}

impl Default for SweepGrid {
    /// mu 0.25..=2 step 0.25, sigma {0.5, 1, 2}, rho {-0.9, -0.6, ..., 0.9}.
    fn default() -> Self {
        Self {
            mus: (1..=8).map(|k| 0.25 * k as f64).collect(),
            sigmas: vec![0.5, 1.0, 2.0],
            rhos: vec![-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceRow {
    pub mu: f64,
    pub sigma: f64,
    pub rho: f64,
    pub eq2: f64,
    pub closed_form: f64,
    pub empirical: f64,
    pub stderr: f64,
}

/// Full factorial sweep in (mu, sigma, rho) order; cell `(a, b, c)` uses seed
/// `derive(seed, [a, b, c])`.
pub fn sweep_surface(grid: &SweepGrid, samples: usize, seed: u64) -> Result<Vec<SurfaceRow>> {
    let mut cells = Vec::new();
    for (a, &mu) in grid.mus.iter().enumerate() {
        for (b, &sigma) in grid.sigmas.iter().enumerate() {
            for (c, &rho) in grid.rhos.iter().enumerate() {
                cells.push(BinaryGaussianSpec {
                    mu_correct: mu,
                    sigma,
                    rho,
                    samples,
                    seed: rng::derive(seed, &[a as u64, b as u64, c as u64]),
                });
            }
        }
    }
    cells
        .into_par_iter()
        .map(|spec| {
            let r = simulate_binary(&spec)?;
            Ok(SurfaceRow {
                mu: spec.mu_correct,
                sigma: spec.sigma,
                rho: spec.rho,
                eq2: r.eq2,
                closed_form: r.closed_form,
                empirical: r.empirical,
                stderr: r.stderr,
            })
        })
        .collect()
}

/// Draws `per_class` rows per class from `N(mu[i], cov[i])`.
pub fn gaussian_sums(
    mu: &[DVector<f64>],
    cov: &[DMatrix<f64>],
    per_class: usize,
    seed: u64,
) -> Result<SumSamples> {
    if mu.len() != cov.len() {
        return Err(Error::DimensionMismatch {
            expected: mu.len(),
            got: cov.len(),
            context: "means vs covariances",
        });
    }
    let classes = mu
        .iter()
        .zip(cov)
        .enumerate()
        .map(|(i, (m, c))| {
            let d = m.len();
            if c.nrows() != d || c.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: c.nrows(),
                    context: "covariance size",
                });
            }
            let l = theory::cholesky_factor(c, i)?;
            let mut r = rng::rng(rng::derive(seed, &[i as u64]));
            let mut out = DMatrix::zeros(per_class, d);
            for k in 0..per_class {
                let z = DVector::from_fn(d, |_, _| r.sample::<f64, _>(StandardNormal));
                out.row_mut(k).copy_from(&(m + &l * z).transpose());
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    SumSamples::new(classes)
}

/// Equicorrelated network: for true class `i`, neuron `i` has mean `gap` and the rest 0;
/// all sums share std `sigma` and pairwise correlation `rho`.
pub fn equicorrelated_sums(
    classes: usize,
    per_class: usize,
    gap: f64,
    sigma: f64,
    rho: f64,
    seed: u64,
) -> Result<SumSamples> {
    if classes < 2 {
        return Err(Error::InvalidInput("need at least 2 classes".into()));
    }
    let floor = -1.0 / (classes - 1) as f64;
    if !(rho > floor && rho < 1.0) {
        return Err(Error::InvalidInput(format!(
            "rho must lie in ({floor}, 1) for {classes} classes, got {rho}"
        )));
    }
    let cov = DMatrix::from_fn(classes, classes, |a, b| {
        sigma * sigma * if a == b { 1.0 } else { rho }
    });
    let mu: Vec<DVector<f64>> = (0..classes)
        .map(|i| DVector::from_fn(classes, |j, _| if j == i { gap } else { 0.0 }))
        .collect();
    gaussian_sums(&mu, &vec![cov; classes], per_class, seed)
}
