//! Python bindings. Matrices cross the boundary as lists of rows.

use perceptor_core::nalgebra::{DMatrix, DVector};
use perceptor_core::analysis;
use perceptor_core::esn::{self, EsnConfig, ReadoutKind};
use perceptor_core::rvfl::{self, Dataset, EncoderConfig, ShallowReadout};
use perceptor_core::synth::{self, BinaryGaussianSpec};
use perceptor_core::theory::{self, PredictOptions};
use perceptor_core::{kde::Bandwidth, ActivationSet, Error, Method, MomentStats, Priors, Similarity};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

fn err(e: Error) -> PyErr {
    if e.is_numeric() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
}

fn similarity(s: &str) -> PyResult<Similarity> {
    match s {
        "dot" => Ok(Similarity::Dot),
        "cosine" => Ok(Similarity::Cosine),
        other => Err(PyValueError::new_err(format!("unknown similarity '{other}'"))),
    }
}

fn priors(s: &str) -> PyResult<Priors> {
    match s {
        "empirical" => Ok(Priors::Empirical),
        "uniform" => Ok(Priors::Uniform),
        other => Err(PyValueError::new_err(format!("unknown priors '{other}'"))),
    }
}

/// Predicted accuracies: one value per class plus the prior-weighted aggregate.
#[pyclass(name = "PredictionReport", frozen)]
struct PyReport {
    #[pyo3(get)]
    per_class: Vec<f64>,
    #[pyo3(get)]
    aggregate: f64,
    #[pyo3(get)]
    method: &'static str,
    #[pyo3(get)]
    priors: Vec<f64>,
    #[pyo3(get)]
    mc_stderr: Option<Vec<f64>>,
}

#[pymethods]
impl PyReport {
    fn __repr__(&self) -> String {
        format!("PredictionReport(method={}, aggregate={:.6})", self.method, self.aggregate)
    }
}

impl From<theory::PredictionReport> for PyReport {
    fn from(r: theory::PredictionReport) -> Self {
        Self {
            per_class: r.per_class,
            aggregate: r.aggregate,
            method: r.method.as_str(),
            priors: r.priors,
            mc_stderr: r.mc_stderr,
        }
    }
}

/// Hit and shared-distractor statistics of the simplest model.
#[pyclass(name = "SharedDistractorStats", frozen)]
struct PyShared {
    inner: perceptor_core::SharedDistractorStats,
}

#[pymethods]
impl PyShared {
    #[new]
    fn new(mu_h: f64, sigma_h: f64, mu_r: f64, sigma_r: f64, classes: usize) -> PyResult<Self> {
        perceptor_core::SharedDistractorStats::new(mu_h, sigma_h, mu_r, sigma_r, classes)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[getter]
    fn mu_h(&self) -> f64 {
        self.inner.mu_h
    }
    #[getter]
    fn sigma_h(&self) -> f64 {
        self.inner.sigma_h
    }
    #[getter]
    fn mu_r(&self) -> f64 {
        self.inner.mu_r
    }
    #[getter]
    fn sigma_r(&self) -> f64 {
        self.inner.sigma_r
    }
    #[getter]
    fn classes(&self) -> usize {
        self.inner.classes
    }

    fn predict(&self) -> PyResult<f64> {
        theory::predict_eq1(&self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        let s = &self.inner;
        format!(
            "SharedDistractorStats(mu_h={}, sigma_h={}, mu_r={}, sigma_r={}, classes={})",
            s.mu_h, s.sigma_h, s.mu_r, s.sigma_r, s.classes
        )
    }
}

/// Accuracy of class `class` when neuron `j` is N(mu[j], sigma[j]^2), all independent.
#[pyfunction]
fn predict_independent(mu: Vec<f64>, sigma: Vec<f64>, class: usize) -> PyResult<f64> {
    theory::predict_independent(&mu, &sigma, class).map_err(err)
}

/// Monte Carlo accuracy of class `class` under N(mu, cov). Returns (accuracy, stderr).
#[pyfunction]
#[pyo3(signature = (mu, cov, class, samples=100_000, seed=0))]
fn predict_correlated(mu: Vec<f64>, cov: Vec<Vec<f64>>, class: usize, samples: usize, seed: u64) -> PyResult<(f64, f64)> {
    let d = mu.len();
    let cov = matrix(&cov)?;
    let stats = MomentStats::gaussian(vec![DVector::from_vec(mu); d], vec![cov; d]).map_err(err)?;
    theory::predict_eq3_mc(&stats, class, samples, seed).map_err(err)
}

/// Predicts accuracy from labeled activations and a readout weight matrix.
#[pyfunction]
#[pyo3(signature = (activations, labels, weights, bias=None, similarity="dot", method="eq2",
                    priors="empirical", mc_samples=100_000, seed=0))]
#[allow(clippy::too_many_arguments)]
fn predict(
    activations: Vec<Vec<f64>>,
    labels: Vec<usize>,
    weights: Vec<Vec<f64>>,
    bias: Option<Vec<f64>>,
    similarity: &str,
    method: &str,
    priors: &str,
    mc_samples: usize,
    seed: u64,
) -> PyResult<PyReport> {
    if activations.len() != labels.len() {
        return Err(PyValueError::new_err("one label per activation row is required"));
    }
    let readout = perceptor_core::ReadoutPerceptron::new(
        matrix(&weights)?,
        bias.map(DVector::from_vec),
        self::similarity(similarity)?,
    )
    .map_err(err)?;
    let rows: Vec<(usize, Vec<f64>)> = labels.into_iter().zip(activations).collect();
    let acts = ActivationSet::from_labeled(&rows, readout.num_classes()).map_err(err)?;
    let sums = perceptor_core::compute_sums(&acts, &readout).map_err(err)?;
    let opts = PredictOptions {
        method: method.parse::<Method>().map_err(err)?,
        mc_samples,
        seed,
        bandwidth: Bandwidth::Auto,
    };
    theory::predict_from_sums(&sums, &self::priors(priors)?, &opts)
        .map(PyReport::from)
        .map_err(err)
}

/// Delayed-recall curve of an integer echo state network, averaged over seeds.
/// Returns one dict per delay.
#[pyfunction]
#[pyo3(signature = (n=100, d=2, kappa=4.0, delays=None, seeds=50, readout="codebook",
                    similarity="cosine", test_len=10_000, train_len=10_000, mc_samples=100_000, seed=0))]
#[allow(clippy::too_many_arguments)]
fn esn_curve<'py>(
    py: Python<'py>,
    n: usize,
    d: usize,
    kappa: f64,
    delays: Option<Vec<usize>>,
    seeds: usize,
    readout: &str,
    similarity: &str,
    test_len: usize,
    train_len: usize,
    mc_samples: usize,
    seed: u64,
) -> PyResult<Vec<Bound<'py, pyo3::types::PyDict>>> {
    let readout = match readout {
        "codebook" => ReadoutKind::Codebook,
        "regression" => ReadoutKind::Regression,
        other => return Err(PyValueError::new_err(format!("unknown readout '{other}'"))),
    };
    let cfg = EsnConfig {
        n,
        alphabet: d,
        kappa,
        delays: delays.unwrap_or_else(|| (0..=10).collect()),
        train_len,
        test_len,
        seed,
        readout,
        similarity: self::similarity(similarity)?,
        mc_samples,
        ..EsnConfig::default()
    };
    let runs = py.detach(|| esn::run_seeds(&cfg, seeds)).map_err(err)?;
    esn::average_curves(&runs)
        .into_iter()
        .map(|r| {
            let row = pyo3::types::PyDict::new(py);
            row.set_item("delay", r.delay)?;
            row.set_item("empirical", r.empirical)?;
            row.set_item("eq1", r.eq1)?;
            row.set_item("eq2", r.eq2)?;
            row.set_item("eq3_mc", r.eq3_mc)?;
            row.set_item("stderr", r.stderr)?;
            Ok(row)
        })
        .collect()
}

/// Cross-validated accuracy of a random-feature classifier on a `label,f1,...` CSV file.
/// Returns (accuracy, eq2 prediction from train folds, eq2 prediction from test folds).
#[pyfunction]
#[pyo3(signature = (path, n=200, kappa=3.0, readout="ridge", lam=1.0, folds=5, seed=0))]
#[allow(clippy::too_many_arguments)]
fn cross_validate(
    py: Python<'_>,
    path: &str,
    n: usize,
    kappa: f64,
    readout: &str,
    lam: f64,
    folds: usize,
    seed: u64,
) -> PyResult<(f64, f64, f64)> {
    let kind = match readout {
        "ridge" => ShallowReadout::Ridge { lambda: lam },
        "centroid" => ShallowReadout::Centroid,
        other => return Err(PyValueError::new_err(format!("unknown readout '{other}'"))),
    };
    let ds = Dataset::load(path).map_err(err)?;
    let cv = py
        .detach(|| rvfl::cross_validate(&ds, &EncoderConfig { n, kappa, seed }, kind, folds, seed.wrapping_add(1)))
        .map_err(err)?;
    Ok((cv.accuracy, cv.pred_eq2_train, cv.pred_eq2_test))
}

/// Readout-only prediction from noisy copies of the filters.
#[pyfunction]
#[pyo3(signature = (weights, noise_db, reps=50, seed=0, similarity="dot"))]
fn readout_only(weights: Vec<Vec<f64>>, noise_db: f64, reps: usize, seed: u64, similarity: &str) -> PyResult<PyReport> {
    let ro = perceptor_core::ReadoutPerceptron::new(matrix(&weights)?, None, self::similarity(similarity)?).map_err(err)?;
    analysis::readout_only_predict(&ro, noise_db, reps, seed)
        .map(PyReport::from)
        .map_err(err)
}

/// Two correlated Gaussian neurons. Returns (empirical, stderr, independent prediction, closed form).
#[pyfunction]
#[pyo3(signature = (mu, sigma, rho, samples=1_000_000, seed=0))]
fn binary_gaussian(mu: f64, sigma: f64, rho: f64, samples: usize, seed: u64) -> PyResult<(f64, f64, f64, f64)> {
    let r = synth::simulate_binary(&BinaryGaussianSpec {
        mu_correct: mu,
        sigma,
        rho,
        samples,
        seed,
    })
    .map_err(err)?;
    Ok((r.empirical, r.stderr, r.eq2, r.closed_form))
}

#[pyfunction]
fn pearson(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    analysis::pearson(&x, &y).map_err(err)
}

#[pyfunction]
fn kendall_tau(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    analysis::kendall_tau(&x, &y).map_err(err)
}

/// Least-squares line `actual = slope * predicted + intercept`. Returns (slope, intercept).
#[pyfunction]
fn fit_bias_line(predicted: Vec<f64>, actual: Vec<f64>) -> PyResult<(f64, f64)> {
    if predicted.len() != actual.len() {
        return Err(PyValueError::new_err("inputs differ in length"));
    }
    let pairs: Vec<(f64, f64)> = predicted.into_iter().zip(actual).collect();
    let line = analysis::fit_bias_line(&pairs).map_err(err)?;
    Ok((line.slope, line.intercept))
}

#[pymodule]
fn perceptor(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyReport>()?;
    m.add_class::<PyShared>()?;
    m.add_function(wrap_pyfunction!(predict_independent, m)?)?;
    m.add_function(wrap_pyfunction!(predict_correlated, m)?)?;
    m.add_function(wrap_pyfunction!(predict, m)?)?;
    m.add_function(wrap_pyfunction!(esn_curve, m)?)?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    m.add_function(wrap_pyfunction!(readout_only, m)?)?;
    m.add_function(wrap_pyfunction!(binary_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(kendall_tau, m)?)?;
    m.add_function(wrap_pyfunction!(fit_bias_line, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
