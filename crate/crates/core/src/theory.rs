//! Accuracy predictors for a winner-take-all readout.
//!
//! Three Gaussian models of the output sums, from most to least restrictive:
//!
//! * shared distractors ([`predict_eq1`]): the correct neuron has its own mean/std and
//!   every other neuron shares one mean/std, all independent;
//! * independent components ([`predict_eq2`]): every neuron has its own mean/std given
//!   the true class, still independent;
//! * full covariance ([`predict_eq3_mc`]): the sums are jointly Gaussian; evaluated by
//!   Monte Carlo because the orthant integral has no tractable quadrature for many classes.
//!
//! [`predict_eq2_kde`] keeps the independent structure but replaces each Gaussian with a
//! kernel density estimate built from observed sums.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kde::{Bandwidth, GaussianKde};
use crate::normal;
use crate::quadrature::integrate;
use crate::rng;
use crate::stats::{MomentStats, Priors, SumSamples};

const QUAD_TOL: f64 = 1e-10;
const QUAD_PANELS: usize = 16;
/// Integration half-width in units of the correct neuron's std.
const SPAN: f64 = 10.0;
const MC_CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Eq1,
    Eq2,
    Eq3Mc,
    Eq2Kde,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Eq1 => "eq1",
            Method::Eq2 => "eq2",
            Method::Eq3Mc => "eq3_mc",
            Method::Eq2Kde => "eq2_kde",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eq1" => Ok(Method::Eq1),
            "eq2" => Ok(Method::Eq2),
            "eq3-mc" | "eq3_mc" => Ok(Method::Eq3Mc),
            "kde" | "eq2-kde" | "eq2_kde" => Ok(Method::Eq2Kde),
            other => Err(Error::InvalidInput(format!("unknown method '{other}'"))),
        }
    }
}

/// Per-class and prior-weighted predicted accuracies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub per_class: Vec<f64>,
    pub aggregate: f64,
    pub method: Method,
    pub priors: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_stderr: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl PredictionReport {
    fn build(per_class: Vec<f64>, priors: Vec<f64>, method: Method) -> Result<Self> {
        let aggregate = aggregate(&per_class, &priors)?;
        Ok(Self {
            per_class,
            aggregate,
            method,
            priors,
            mc_samples: None,
            mc_stderr: None,
            seed: None,
        })
    }

    /// Standard error of the aggregate, when the per-class values are MC estimates.
    pub fn aggregate_stderr(&self) -> Option<f64> {
        self.mc_stderr.as_ref().map(|se| {
            se.iter()
                .zip(&self.priors)
                .map(|(s, f)| (s * f).powi(2))
                .sum::<f64>()
                .sqrt()
        })
    }
}

/// Statistics of the shared-distractor model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharedDistractorStats {
    pub mu_h: f64,
    pub sigma_h: f64,
    pub mu_r: f64,
    pub sigma_r: f64,
    pub classes: usize,
}

impl SharedDistractorStats {
    pub fn new(mu_h: f64, sigma_h: f64, mu_r: f64, sigma_r: f64, classes: usize) -> Result<Self> {
        let s = Self {
            mu_h,
            sigma_h,
            mu_r,
            sigma_r,
            classes,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if ![self.mu_h, self.sigma_h, self.mu_r, self.sigma_r]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::NonFinite("shared distractor stats"));
        }
        if self.sigma_h <= 0.0 || self.sigma_r <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "sigma_h and sigma_r must be > 0 (got {}, {})",
                self.sigma_h, self.sigma_r
            )));
        }
        if self.classes < 2 {
            return Err(Error::InvalidInput("need at least 2 classes".into()));
        }
        Ok(())
    }

    /// Pools hit sums (each sample's own-class neuron) and reject sums (all others).
    pub fn from_sums(sums: &SumSamples) -> Result<Self> {
        let d = sums.num_classes();
        let (mut hits, mut rejects) = (Welford::default(), Welford::default());
        for (i, m) in sums.classes().iter().enumerate() {
            for row in m.row_iter() {
                for (j, &v) in row.iter().enumerate() {
                    if j == i {
                        hits.push(v);
                    } else {
                        rejects.push(v);
                    }
                }
            }
        }
        Self::new(hits.mean, hits.std(), rejects.mean, rejects.std(), d)
    }

    /// Hit and reject statistics of each class's own samples.
    pub fn per_class(sums: &SumSamples) -> Result<Vec<Self>> {
        let d = sums.num_classes();
        sums.classes()
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let (mut hits, mut rejects) = (Welford::default(), Welford::default());
                for row in m.row_iter() {
                    for (j, &v) in row.iter().enumerate() {
                        if j == i {
                            hits.push(v);
                        } else {
                            rejects.push(v);
                        }
                    }
                }
                Self::new(hits.mean, hits.std(), rejects.mean, rejects.std(), d)
            })
            .collect()
    }
}

#[derive(Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn std(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).sqrt()
        }
    }
}

/// Probability that the correct neuron beats `D - 1` i.i.d. distractors. The
/// integration variable is the standardized hit sum, so each distractor CDF is
/// evaluated at `(mu_h + sigma_h x - mu_r) / sigma_r`.
pub fn predict_eq1(s: &SharedDistractorStats) -> Result<f64> {
    s.validate()?;
    let a = s.sigma_h / s.sigma_r;
    let b = (s.mu_h - s.mu_r) / s.sigma_r;
    let power = (s.classes - 1) as f64;
    let v = integrate(
        |x| normal::pdf(x) * normal::cdf(a * x + b).powf(power),
        -SPAN,
        SPAN,
        &[],
        QUAD_PANELS,
        QUAD_TOL,
    );
    Ok(v.clamp(0.0, 1.0))
}

/// Independent-Gaussian accuracy for one class, given that class's component means and
/// stds (`mu[j]`, `sigma[j]` describe neuron `j` when the true class is `class`).
///
/// Zero-std components are point masses; a tie with the correct neuron counts as a miss.
pub fn predict_independent(mu: &[f64], sigma: &[f64], class: usize) -> Result<f64> {
    let d = mu.len();
    if sigma.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: sigma.len(),
            context: "sigma length",
        });
    }
    if class >= d {
        return Err(Error::IndexOutOfRange {
            index: class,
            len: d,
        });
    }
    if mu.iter().chain(sigma).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("moments"));
    }
    if sigma.iter().any(|&s| s < 0.0) {
        return Err(Error::InvalidInput("negative standard deviation".into()));
    }
    let (mi, si) = (mu[class], sigma[class]);
    let others = || (0..d).filter(move |&j| j != class);

    if si == 0.0 {
        let p = others()
            .map(|j| normal::cdf_with(mi, mu[j], sigma[j]))
            .product::<f64>();
        return Ok(p.clamp(0.0, 1.0));
    }

    // integrate in standardized units so a tiny si does not collapse the interval
    let gap: Vec<f64> = (0..d).map(|j| mi - mu[j]).collect();
    let breaks: Vec<f64> = others()
        .filter(|&j| sigma[j] < 0.05 * si)
        .map(|j| -gap[j] / si)
        .filter(|z| z.abs() < SPAN)
        .collect();
    let v = integrate(
        |z| {
            let mut p = normal::pdf(z);
            for j in others() {
                if p == 0.0 {
                    break;
                }
                let t = gap[j] + si * z;
                p *= if sigma[j] == 0.0 {
                    f64::from(u8::from(t > 0.0))
                } else {
                    normal::cdf(t / sigma[j])
                };
            }
            p
        },
        -SPAN,
        SPAN,
        &breaks,
        QUAD_PANELS,
        QUAD_TOL,
    );
    Ok(v.clamp(0.0, 1.0))
}

/// Independent-component accuracy of class `class`.
pub fn predict_eq2(stats: &MomentStats, class: usize) -> Result<f64> {
    if class >= stats.num_classes() {
        return Err(Error::IndexOutOfRange {
            index: class,
            len: stats.num_classes(),
        });
    }
    predict_independent(
        stats.mu(class).as_slice(),
        stats.sigma(class).as_slice(),
        class,
    )
}

/// Lower-triangular factor of a PSD matrix; the zero matrix factors to zero.
pub fn cholesky_factor(cov: &DMatrix<f64>, class: usize) -> Result<DMatrix<f64>> {
    if cov.iter().all(|&v| v == 0.0) {
        return Ok(DMatrix::zeros(cov.nrows(), cov.ncols()));
    }
    cov.clone()
        .cholesky()
        .map(|c| c.unpack())
        .ok_or(Error::Cholesky(class))
}

/// Fraction of draws from `N(mu, L L^T)` whose component `class` is the strict maximum.
/// Returns `(accuracy, binomial standard error)`.
pub fn mc_argmax_frequency(
    mu: &DVector<f64>,
    factor: &DMatrix<f64>,
    class: usize,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples < 1 {
        return Err(Error::InvalidInput("need at least one MC sample".into()));
    }
    let d = mu.len();
    let chunks = samples.div_ceil(MC_CHUNK);
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut r = rng::rng(rng::derive(seed, &[c as u64]));
            let mut z = vec![0.0; d];
            let mut x = vec![0.0; d];
            let mut count = 0usize;
            for _ in 0..n {
                for v in z.iter_mut() {
                    *v = r.sample(StandardNormal);
                }
                for j in 0..d {
                    let mut s = mu[j];
                    for k in 0..=j {
                        s += factor[(j, k)] * z[k];
                    }
                    x[j] = s;
                }
                let xi = x[class];
                if x.iter().enumerate().all(|(j, &v)| j == class || v < xi) {
                    count += 1;
                }
            }
            count
        })
        .sum();
    let a = hits as f64 / samples as f64;
    Ok((a, (a * (1.0 - a) / samples as f64).sqrt()))
}

/// Full-covariance accuracy of class `class` by Monte Carlo.
pub fn predict_eq3_mc(
    stats: &MomentStats,
    class: usize,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if class >= stats.num_classes() {
        return Err(Error::IndexOutOfRange {
            index: class,
            len: stats.num_classes(),
        });
    }
    let cov = stats
        .cov(class)
        .ok_or(Error::CovarianceUnavailable(class))?;
    let factor = cholesky_factor(cov, class)?;
    mc_argmax_frequency(stats.mu(class), &factor, class, samples, seed)
}

/// Independent-component accuracy with KDE marginals estimated from the sums of `class`.
pub fn predict_eq2_kde(sums: &SumSamples, class: usize, bandwidth: Bandwidth) -> Result<f64> {
    let d = sums.num_classes();
    if class >= d {
        return Err(Error::IndexOutOfRange {
            index: class,
            len: d,
        });
    }
    let x = sums.class(class);
    if x.nrows() < 5 {
        return Err(Error::InsufficientSamples {
            class,
            got: x.nrows(),
            need: 5,
        });
    }
    let kdes = x
        .column_iter()
        .map(|c| GaussianKde::new(c.as_slice(), bandwidth))
        .collect::<Result<Vec<_>>>()?;
    let own = &kdes[class];
    let (lo, hi) = (
        own.min() - 5.0 * own.bandwidth(),
        own.max() + 5.0 * own.bandwidth(),
    );
    let panels = (((hi - lo) / own.bandwidth()).ceil() as usize).clamp(QUAD_PANELS, 4096);
    let v = integrate(
        |t| {
            let mut p = own.pdf(t);
            for (j, k) in kdes.iter().enumerate() {
                if j == class {
                    continue;
                }
                if p == 0.0 {
                    break;
                }
                p *= k.cdf(t);
            }
            p
        },
        lo,
        hi,
        &[],
        panels,
        QUAD_TOL,
    );
    Ok(v.clamp(0.0, 1.0))
}

/// `sum_i f_i a_i`.
pub fn aggregate(per_class: &[f64], priors: &[f64]) -> Result<f64> {
    if per_class.len() != priors.len() {
        return Err(Error::DimensionMismatch {
            expected: priors.len(),
            got: per_class.len(),
            context: "per-class accuracies vs priors",
        });
    }
    Ok(per_class.iter().zip(priors).map(|(a, f)| a * f).sum())
}

/// Shared-distractor prediction reported for every class.
pub fn report_eq1(s: &SharedDistractorStats, priors: &[f64]) -> Result<PredictionReport> {
    let a = predict_eq1(s)?;
    PredictionReport::build(vec![a; priors.len()], priors.to_vec(), Method::Eq1)
}

/// Shared-distractor prediction from each class's own statistics.
pub fn report_eq1_per_class(stats: &[SharedDistractorStats], priors: &[f64]) -> Result<PredictionReport> {
    let per_class = stats.iter().map(predict_eq1).collect::<Result<Vec<_>>>()?;
    PredictionReport::build(per_class, priors.to_vec(), Method::Eq1)
}

pub fn report_eq2(stats: &MomentStats) -> Result<PredictionReport> {
    let per_class = (0..stats.num_classes())
        .into_par_iter()
        .map(|i| predict_eq2(stats, i))
        .collect::<Result<Vec<_>>>()?;
    PredictionReport::build(per_class, stats.priors().to_vec(), Method::Eq2)
}

/// Monte Carlo over all classes; class `i` uses seed `seed ^ i`.
pub fn report_eq3_mc(stats: &MomentStats, samples: usize, seed: u64) -> Result<PredictionReport> {
    let results = (0..stats.num_classes())
        .into_par_iter()
        .map(|i| predict_eq3_mc(stats, i, samples, seed ^ i as u64))
        .collect::<Result<Vec<_>>>()?;
    let (per_class, se): (Vec<f64>, Vec<f64>) = results.into_iter().unzip();
    let mut r = PredictionReport::build(per_class, stats.priors().to_vec(), Method::Eq3Mc)?;
    r.mc_samples = Some(samples);
    r.mc_stderr = Some(se);
    r.seed = Some(seed);
    Ok(r)
}

pub fn report_eq2_kde(
    sums: &SumSamples,
    priors: &Priors,
    bandwidth: Bandwidth,
) -> Result<PredictionReport> {
    let priors = priors.resolve(&sums.counts())?;
    let per_class = (0..sums.num_classes())
        .into_par_iter()
        .map(|i| predict_eq2_kde(sums, i, bandwidth))
        .collect::<Result<Vec<_>>>()?;
    PredictionReport::build(per_class, priors, Method::Eq2Kde)
}

/// Method choice plus the knobs the sampling-based methods need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictOptions {
    pub method: Method,
    pub mc_samples: usize,
    pub seed: u64,
    pub bandwidth: Bandwidth,
}

impl Default for PredictOptions {
    fn default() -> Self {
        Self {
            method: Method::Eq2,
            mc_samples: 100_000,
            seed: 0,
            bandwidth: Bandwidth::Auto,
        }
    }
}

/// Runs the chosen predictor on raw sums. Only the Monte Carlo path estimates
/// covariances; the shared-distractor path pools hits and rejects over all classes.
pub fn predict_from_sums(sums: &SumSamples, priors: &Priors, opts: &PredictOptions) -> Result<PredictionReport> {
    match opts.method {
        Method::Eq1 => {
            let p = priors.resolve(&sums.counts())?;
            report_eq1(&SharedDistractorStats::from_sums(sums)?, &p)
        }
        Method::Eq2 => report_eq2(&crate::stats::estimate_moments_diagonal(sums, priors)?),
        Method::Eq3Mc => report_eq3_mc(
            &crate::stats::estimate_moments(sums, priors)?,
            opts.mc_samples,
            opts.seed,
        ),
        Method::Eq2Kde => report_eq2_kde(sums, priors, opts.bandwidth),
    }
}
