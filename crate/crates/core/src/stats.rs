//! Postsynaptic-sum statistics.
//!
//! A network is viewed as an encoder followed by a dense readout. Activations of the
//! last hidden layer, grouped by true class, are pushed through the readout to get the
//! sums at every output neuron; the per-class first two moments of those sums are what
//! every predictor in [`crate::theory`] consumes.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a readout row is compared to an activation vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    #[default]
    Dot,
    Cosine,
}

impl std::str::FromStr for Similarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dot" => Ok(Similarity::Dot),
            "cosine" => Ok(Similarity::Cosine),
            other => Err(Error::InvalidInput(format!("unknown similarity '{other}'"))),
        }
    }
}

/// Last-hidden-layer activations grouped by true class.
///
/// Class `i` is an `M_i x N` matrix, one activation vector per row.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSet {
    dim: usize,
    classes: Vec<DMatrix<f64>>,
}

impl ActivationSet {
    pub fn new(classes: Vec<DMatrix<f64>>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::InvalidInput("activation set has no classes".into()));
        }
        let dim = classes[0].ncols();
        if dim == 0 {
            return Err(Error::InvalidInput("activation vectors are empty".into()));
        }
        for (i, m) in classes.iter().enumerate() {
            if m.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: m.ncols(),
                    context: "activation vector length",
                });
            }
            if m.nrows() == 0 {
                return Err(Error::InsufficientSamples {
                    class: i,
                    got: 0,
                    need: 1,
                });
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("activations"));
            }
        }
        Ok(Self { dim, classes })
    }

    /// Groups `(label, vector)` pairs into `num_classes` classes, keeping input order.
    pub fn from_labeled(rows: &[(usize, Vec<f64>)], num_classes: usize) -> Result<Self> {
        let dim = rows.first().map(|r| r.1.len()).unwrap_or(0);
        let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); num_classes];
        for (label, v) in rows {
            if *label >= num_classes {
                return Err(Error::IndexOutOfRange {
                    index: *label,
                    len: num_classes,
                });
            }
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                    context: "activation vector length",
                });
            }
            buckets[*label].extend_from_slice(v);
        }
        let classes = buckets
            .into_iter()
            .map(|flat| DMatrix::from_row_slice(flat.len() / dim.max(1), dim, &flat))
            .collect();
        Self::new(classes)
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class(&self, i: usize) -> &DMatrix<f64> {
        &self.classes[i]
    }

    pub fn classes(&self) -> &[DMatrix<f64>] {
        &self.classes
    }

    pub fn counts(&self) -> Vec<usize> {
        self.classes.iter().map(|m| m.nrows()).collect()
    }
}

/// A dense readout layer viewed as `D` linear filters (rows of a `D x N` matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutPerceptron {
    weights: DMatrix<f64>,
    bias: Option<DVector<f64>>,
    similarity: Similarity,
}

impl ReadoutPerceptron {
    pub fn new(
        weights: DMatrix<f64>,
        bias: Option<DVector<f64>>,
        similarity: Similarity,
    ) -> Result<Self> {
        if weights.nrows() < 2 {
            return Err(Error::InvalidInput(format!(
                "readout needs at least 2 classes, got {}",
                weights.nrows()
            )));
        }
        if weights.ncols() == 0 {
            return Err(Error::InvalidInput("readout filters are empty".into()));
        }
        if weights.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("readout weights"));
        }
        if let Some(b) = &bias {
            if b.len() != weights.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: weights.nrows(),
                    got: b.len(),
                    context: "bias length",
                });
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("readout bias"));
            }
        }
        if similarity == Similarity::Cosine && weights.row_iter().any(|r| r.norm() == 0.0) {
            return Err(Error::ZeroNorm("readout filter"));
        }
        Ok(Self {
            weights,
            bias,
            similarity,
        })
    }

    pub fn dot(weights: DMatrix<f64>) -> Result<Self> {
        Self::new(weights, None, Similarity::Dot)
    }

    pub fn num_classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn bias(&self) -> Option<&DVector<f64>> {
        self.bias.as_ref()
    }

    pub fn similarity(&self) -> Similarity {
        self.similarity
    }

    pub fn with_similarity(mut self, similarity: Similarity) -> Result<Self> {
        if similarity == Similarity::Cosine && self.weights.row_iter().any(|r| r.norm() == 0.0) {
            return Err(Error::ZeroNorm("readout filter"));
        }
        self.similarity = similarity;
        Ok(self)
    }

    /// Sums at every output neuron for each row of `x` (`M x N` in, `M x D` out).
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.ncols(),
                context: "activation dim vs readout",
            });
        }
        let mut out = x * self.weights.transpose();
        match self.similarity {
            Similarity::Dot => {
                if let Some(b) = &self.bias {
                    for mut row in out.row_iter_mut() {
                        row += b.transpose();
                    }
                }
            }
            Similarity::Cosine => {
                let filter_norms: Vec<f64> = self.weights.row_iter().map(|r| r.norm()).collect();
                for (r, xrow) in x.row_iter().enumerate() {
                    let xn = xrow.norm();
                    if xn == 0.0 {
                        return Err(Error::ZeroNorm("activation vector"));
                    }
                    for (j, fnorm) in filter_norms.iter().enumerate() {
                        out[(r, j)] /= xn * fnorm;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Winner-take-all decision for one vector of sums; `None` when the maximum is tied.
    pub fn decide(sums: &[f64]) -> Option<usize> {
        strict_argmax(sums)
    }
}

/// Index of the strict maximum, `None` on ties.
pub fn strict_argmax(values: &[f64]) -> Option<usize> {
    let mut best = 0;
    let mut tied = false;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = j;
            tied = false;
        } else if v == values[best] {
            tied = true;
        }
    }
    (!tied).then_some(best)
}

/// Per true class, the `M_i x D` matrix of sums across all output neurons.
#[derive(Debug, Clone, PartialEq)]
pub struct SumSamples {
    classes: Vec<DMatrix<f64>>,
}

impl SumSamples {
    pub fn new(classes: Vec<DMatrix<f64>>) -> Result<Self> {
        let d = classes.len();
        if d < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 classes of sums, got {d}"
            )));
        }
        for (i, m) in classes.iter().enumerate() {
            if m.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: m.ncols(),
                    context: "sum vector length",
                });
            }
            if m.nrows() == 0 {
                return Err(Error::InsufficientSamples {
                    class: i,
                    got: 0,
                    need: 1,
                });
            }
        }
        Ok(Self { classes })
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class(&self, i: usize) -> &DMatrix<f64> {
        &self.classes[i]
    }

    pub fn classes(&self) -> &[DMatrix<f64>] {
        &self.classes
    }

    pub fn counts(&self) -> Vec<usize> {
        self.classes.iter().map(|m| m.nrows()).collect()
    }

    /// Fraction of rows per class whose own neuron is the strict maximum.
    pub fn per_class_accuracy(&self) -> Vec<f64> {
        self.classes
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let hits = m
                    .row_iter()
                    .filter(|r| {
                        let v: Vec<f64> = r.iter().copied().collect();
                        strict_argmax(&v) == Some(i)
                    })
                    .count();
                hits as f64 / m.nrows() as f64
            })
            .collect()
    }
}

/// Pushes every activation vector through the readout.
pub fn compute_sums(acts: &ActivationSet, readout: &ReadoutPerceptron) -> Result<SumSamples> {
    if acts.dim() != readout.dim() {
        return Err(Error::DimensionMismatch {
            expected: readout.dim(),
            got: acts.dim(),
            context: "activation dim vs readout",
        });
    }
    if acts.num_classes() != readout.num_classes() {
        return Err(Error::DimensionMismatch {
            expected: readout.num_classes(),
            got: acts.num_classes(),
            context: "activation classes vs readout rows",
        });
    }
    let classes = acts
        .classes()
        .iter()
        .map(|x| readout.apply(x))
        .collect::<Result<Vec<_>>>()?;
    SumSamples::new(classes)
}

/// Class priors used to aggregate per-class accuracies.
#[derive(Debug, Clone, PartialEq)]
pub enum Priors {
    /// `M_i / sum_j M_j`.
    Empirical,
    Uniform,
    Given(Vec<f64>),
}

impl Priors {
    pub fn resolve(&self, counts: &[usize]) -> Result<Vec<f64>> {
        let d = counts.len();
        let raw = match self {
            Priors::Empirical => counts.iter().map(|&c| c as f64).collect::<Vec<_>>(),
            Priors::Uniform => vec![1.0; d],
            Priors::Given(f) => {
                if f.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: f.len(),
                        context: "priors length",
                    });
                }
                if f.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidInput("priors must be finite and >= 0".into()));
                }
                let s: f64 = f.iter().sum();
                if (s - 1.0).abs() > 1e-6 {
                    return Err(Error::InvalidInput(format!("priors sum to {s}, not 1")));
                }
                f.clone()
            }
        };
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidInput("priors have zero mass".into()));
        }
        Ok(raw.into_iter().map(|v| v / total).collect())
    }
}

/// First two moments of the sums, per true class.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentStats {
    mu: Vec<DVector<f64>>,
    sigma: Vec<DVector<f64>>,
    cov: Vec<Option<DMatrix<f64>>>,
    priors: Vec<f64>,
    counts: Vec<usize>,
}

impl MomentStats {
    /// Assembles stats from explicit parts. Covariances are regularized to PSD.
    pub fn from_parts(
        mu: Vec<DVector<f64>>,
        sigma: Vec<DVector<f64>>,
        cov: Vec<Option<DMatrix<f64>>>,
        priors: Vec<f64>,
        counts: Vec<usize>,
    ) -> Result<Self> {
        let d = mu.len();
        if d < 2 {
            return Err(Error::InvalidInput("stats need at least 2 classes".into()));
        }
        if sigma.len() != d || cov.len() != d || priors.len() != d || counts.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: sigma.len().min(cov.len()).min(priors.len()).min(counts.len()),
                context: "per-class stats length",
            });
        }
        for i in 0..d {
            if mu[i].len() != d || sigma[i].len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: mu[i].len().min(sigma[i].len()),
                    context: "moment vector length",
                });
            }
            if mu[i].iter().chain(sigma[i].iter()).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("moments"));
            }
            if sigma[i].iter().any(|&s| s < 0.0) {
                return Err(Error::InvalidInput("negative standard deviation".into()));
            }
        }
        let priors = Priors::Given(priors).resolve(&counts)?;
        let cov = cov
            .into_iter()
            .map(|c| match c {
                Some(m) => {
                    if m.nrows() != d || m.ncols() != d {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            got: m.nrows(),
                            context: "covariance size",
                        });
                    }
                    if m.iter().any(|v| !v.is_finite()) {
                        return Err(Error::NonFinite("covariance"));
                    }
                    Ok(Some(regularize_psd(symmetrize(m))))
                }
                None => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mu,
            sigma,
            cov,
            priors,
            counts,
        })
    }

    /// Independent Gaussians: covariance is `diag(sigma^2)`, uniform priors.
    pub fn independent(mu: Vec<DVector<f64>>, sigma: Vec<DVector<f64>>) -> Result<Self> {
        let d = mu.len();
        let cov = sigma
            .iter()
            .map(|s| Some(DMatrix::from_diagonal(&s.map(|v| v * v))))
            .collect();
        Self::from_parts(mu, sigma, cov, vec![1.0 / d as f64; d], vec![0; d])
    }

    /// Full-covariance Gaussians with uniform priors; sigma is read off the diagonal.
    pub fn gaussian(mu: Vec<DVector<f64>>, cov: Vec<DMatrix<f64>>) -> Result<Self> {
        let d = mu.len();
        let sigma = cov
            .iter()
            .map(|c| c.diagonal().map(|v| v.max(0.0).sqrt()))
            .collect();
        Self::from_parts(
            mu,
            sigma,
            cov.into_iter().map(Some).collect(),
            vec![1.0 / d as f64; d],
            vec![0; d],
        )
    }

    pub fn num_classes(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self, i: usize) -> &DVector<f64> {
        &self.mu[i]
    }

    pub fn sigma(&self, i: usize) -> &DVector<f64> {
        &self.sigma[i]
    }

    pub fn cov(&self, i: usize) -> Option<&DMatrix<f64>> {
        self.cov[i].as_ref()
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn has_covariance(&self) -> bool {
        self.cov.iter().all(Option::is_some)
    }

    /// Same moments, different priors.
    pub fn with_priors(mut self, priors: &Priors) -> Result<Self> {
        self.priors = match priors {
            Priors::Empirical if self.counts.iter().all(|&c| c == 0) => {
                return Err(Error::InvalidInput(
                    "empirical priors need sample counts".into(),
                ))
            }
            p => p.resolve(&self.counts)?,
        };
        Ok(self)
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Adds `eps * I` when the smallest eigenvalue drops below `eps = 1e-10 * trace / D`.
pub fn regularize_psd(mut cov: DMatrix<f64>) -> DMatrix<f64> {
    let d = cov.nrows();
    let eps = 1e-10 * cov.trace() / d as f64;
    let min_eig = SymmetricEigen::new(cov.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min_eig < eps {
        let shift = if min_eig < 0.0 { eps - min_eig } else { eps };
        for k in 0..d {
            cov[(k, k)] += shift;
        }
    }
    cov
}

fn class_moments(x: &DMatrix<f64>, with_cov: bool) -> (DVector<f64>, DVector<f64>, Option<DMatrix<f64>>) {
    let m = x.nrows();
    let d = x.ncols();
    let mean = x.row_mean().transpose();
    if m < 2 {
        return (mean, DVector::zeros(d), None);
    }
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let denom = (m - 1) as f64;
    if with_cov {
        let cov = centered.transpose() * &centered / denom;
        let sigma = cov.diagonal().map(|v| v.max(0.0).sqrt());
        (mean, sigma, Some(cov))
    } else {
        let sigma = DVector::from_iterator(
            d,
            centered
                .column_iter()
                .map(|c| (c.norm_squared() / denom).sqrt()),
        );
        (mean, sigma, None)
    }
}

fn assemble(sums: &SumSamples, priors: &Priors, with_cov: bool) -> Result<MomentStats> {
    let counts = sums.counts();
    let priors = priors.resolve(&counts)?;
    let mut mu = Vec::with_capacity(counts.len());
    let mut sigma = Vec::with_capacity(counts.len());
    let mut cov = Vec::with_capacity(counts.len());
    for x in sums.classes() {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sums"));
        }
        let (m, s, c) = class_moments(x, with_cov);
        mu.push(m);
        sigma.push(s);
        cov.push(c.map(|c| regularize_psd(symmetrize(c))));
    }
    Ok(MomentStats {
        mu,
        sigma,
        cov,
        priors,
        counts,
    })
}

/// Per-class sample mean, unbiased std and unbiased covariance (regularized to PSD).
///
/// Classes with a single sample get zero std and no covariance.
pub fn estimate_moments(sums: &SumSamples, priors: &Priors) -> Result<MomentStats> {
    assemble(sums, priors, true)
}

/// Like [`estimate_moments`] but skips the `D x D` covariances.
pub fn estimate_moments_diagonal(sums: &SumSamples, priors: &Priors) -> Result<MomentStats> {
    assemble(sums, priors, false)
}

/// Mean over classes of the mean off-diagonal Pearson correlation in each covariance.
pub fn avg_correlation(stats: &MomentStats) -> Result<f64> {
    let d = stats.num_classes();
    let mut total = 0.0;
    for i in 0..d {
        let cov = stats.cov(i).ok_or(Error::CovarianceUnavailable(i))?;
        if let Some(k) = stats.sigma(i).iter().position(|&s| s <= 0.0) {
            return Err(Error::ZeroVariance { class: i, neuron: k });
        }
        total += mean_offdiag_correlation(cov, i)?;
    }
    Ok(total / d as f64)
}

/// Same diagnostic computed class by class from the raw (unregularized) sample
/// covariances, so only one `D x D` matrix per worker is alive at a time.
pub fn avg_correlation_from_sums(sums: &SumSamples) -> Result<f64> {
    use rayon::prelude::*;
    let d = sums.num_classes();
    let parts = (0..d)
        .into_par_iter()
        .map(|i| {
            let (_, _, cov) = class_moments(sums.class(i), true);
            let cov = cov.ok_or(Error::InsufficientSamples {
                class: i,
                got: sums.class(i).nrows(),
                need: 2,
            })?;
            mean_offdiag_correlation(&cov, i)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.iter().sum::<f64>() / d as f64)
}

fn mean_offdiag_correlation(cov: &DMatrix<f64>, class: usize) -> Result<f64> {
    let n = cov.nrows();
    if let Some(k) = (0..n).find(|&k| cov[(k, k)] <= 0.0) {
        return Err(Error::ZeroVariance { class, neuron: k });
    }
    let mut acc = 0.0;
    for j in 0..n {
        for k in 0..n {
            if j != k {
                acc += cov[(j, k)] / (cov[(j, j)] * cov[(k, k)]).sqrt();
            }
        }
    }
    Ok(acc / (n * (n - 1)) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn identity_readout_passes_through() {
        let acts = ActivationSet::new(vec![
            DMatrix::from_row_slice(1, 2, &[3.0, 5.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
        ])
        .unwrap();
        let r = ReadoutPerceptron::dot(DMatrix::identity(2, 2)).unwrap();
        let s = compute_sums(&acts, &r).unwrap();
        assert_eq!(s.class(0).row(0).iter().copied().collect::<Vec<_>>(), vec![3.0, 5.0]);
    }

    #[test]
    fn cosine_with_unit_filters() {
        let acts = ActivationSet::new(vec![
            DMatrix::from_row_slice(1, 2, &[3.0, 4.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        ])
        .unwrap();
        let r = ReadoutPerceptron::new(DMatrix::identity(2, 2), None, Similarity::Cosine).unwrap();
        let s = compute_sums(&acts, &r).unwrap();
        assert!((s.class(0)[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((s.class(0)[(0, 1)] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn cosine_ignores_bias_and_dot_adds_it() {
        let w = DMatrix::identity(2, 2);
        let b = Some(DVector::from_vec(vec![10.0, -10.0]));
        let x = DMatrix::from_row_slice(1, 2, &[3.0, 4.0]);
        let dot = ReadoutPerceptron::new(w.clone(), b.clone(), Similarity::Dot).unwrap();
        let cos = ReadoutPerceptron::new(w, b, Similarity::Cosine).unwrap();
        assert_eq!(dot.apply(&x).unwrap()[(0, 0)], 13.0);
        assert!((cos.apply(&x).unwrap()[(0, 0)] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn matches_naive_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (d, n) = (3, 10);
        let w = DMatrix::from_fn(d, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let bias = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let classes: Vec<_> = (0..d)
            .map(|_| DMatrix::from_fn(34, n, |_, _| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let acts = ActivationSet::new(classes).unwrap();
        let r = ReadoutPerceptron::new(w.clone(), Some(bias.clone()), Similarity::Dot).unwrap();
        let sums = compute_sums(&acts, &r).unwrap();
        for c in 0..d {
            let x = acts.class(c);
            for m in 0..x.nrows() {
                for j in 0..d {
                    let mut s = bias[j];
                    for k in 0..n {
                        s += w[(j, k)] * x[(m, k)];
                    }
                    assert!((sums.class(c)[(m, j)] - s).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dimension_mismatch_and_zero_norm() {
        let acts = ActivationSet::new(vec![DMatrix::zeros(1, 3), DMatrix::zeros(1, 3)]).unwrap();
        let r = ReadoutPerceptron::dot(DMatrix::identity(2, 2)).unwrap();
        assert!(matches!(
            compute_sums(&acts, &r),
            Err(Error::DimensionMismatch { .. })
        ));
        let acts = ActivationSet::new(vec![DMatrix::zeros(1, 2), DMatrix::zeros(1, 2)]).unwrap();
        let r = ReadoutPerceptron::new(DMatrix::identity(2, 2), None, Similarity::Cosine).unwrap();
        assert_eq!(compute_sums(&acts, &r), Err(Error::ZeroNorm("activation vector")));
        assert!(ReadoutPerceptron::new(DMatrix::zeros(2, 2), None, Similarity::Cosine).is_err());
    }

    #[test]
    fn hand_computed_moments() {
        let sums = SumSamples::new(vec![
            DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 2.0, 2.0]),
            DMatrix::from_row_slice(10, 2, &[5.0; 20]),
        ])
        .unwrap();
        let st = estimate_moments(&sums, &Priors::Empirical).unwrap();
        assert_eq!(st.mu(0).as_slice(), &[1.0, 1.0]);
        let r2 = 2f64.sqrt();
        assert!((st.sigma(0)[0] - r2).abs() < 1e-15 && (st.sigma(0)[1] - r2).abs() < 1e-15);
        let c = st.cov(0).unwrap();
        // rank-1, so the jitter kicks in; it is tiny
        for v in c.iter() {
            assert!((v - 2.0).abs() < 1e-9);
        }
        assert_eq!(st.mu(1).as_slice(), &[5.0, 5.0]);
        assert_eq!(st.sigma(1).as_slice(), &[0.0, 0.0]);
        assert!((st.priors()[0] - 2.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn law_of_large_numbers() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let classes: Vec<_> = (0..2)
            .map(|_| DMatrix::from_fn(10_000, 2, |_, _| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let st = estimate_moments(&SumSamples::new(classes).unwrap(), &Priors::Uniform).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(st.mu(i)[j].abs() < 0.05);
                assert!((st.sigma(i)[j] - 1.0).abs() < 0.05);
            }
        }
    }

    #[test]
    fn single_sample_class_has_no_covariance() {
        let sums = SumSamples::new(vec![
            DMatrix::from_row_slice(1, 2, &[1.0, 2.0]),
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        ])
        .unwrap();
        let st = estimate_moments(&sums, &Priors::Empirical).unwrap();
        assert!(st.cov(0).is_none());
        assert!(st.cov(1).is_some());
        assert!(!st.has_covariance());
        assert_eq!(avg_correlation(&st), Err(Error::CovarianceUnavailable(0)));
    }

    #[test]
    fn avg_correlation_cases() {
        let diag = MomentStats::independent(
            vec![DVector::zeros(3); 3],
            vec![DVector::from_vec(vec![1.0, 2.0, 3.0]); 3],
        )
        .unwrap();
        assert_eq!(avg_correlation(&diag).unwrap(), 0.0);

        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let st = MomentStats::gaussian(vec![DVector::zeros(2); 2], vec![c.clone(), c]).unwrap();
        assert!((avg_correlation(&st).unwrap() - 0.5).abs() < 1e-15);

        let zero = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let st = MomentStats::gaussian(vec![DVector::zeros(2); 2], vec![zero.clone(), zero]).unwrap();
        assert_eq!(
            avg_correlation(&st),
            Err(Error::ZeroVariance { class: 0, neuron: 0 })
        );
    }

    #[test]
    fn avg_correlation_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let covs: Vec<DMatrix<f64>> = (0..4)
            .map(|_| {
                let a = DMatrix::from_fn(4, 6, |_, _| rng.sample::<f64, _>(StandardNormal));
                &a * a.transpose()
            })
            .collect();
        let st = MomentStats::gaussian(vec![DVector::zeros(4); 4], covs.clone()).unwrap();
        let mut expected = 0.0;
        for (i, _) in covs.iter().enumerate() {
            let c = st.cov(i).unwrap();
            let mut s = 0.0;
            let mut pairs = 0;
            for j in 0..4 {
                for k in 0..4 {
                    if j == k {
                        continue;
                    }
                    s += c[(j, k)] / (c[(j, j)].sqrt() * c[(k, k)].sqrt());
                    pairs += 1;
                }
            }
            assert_eq!(pairs, 12);
            expected += s / 12.0;
        }
        expected /= 4.0;
        assert!((avg_correlation(&st).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn streaming_avg_correlation_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sums = SumSamples::new(
            (0..3)
                .map(|_| {
                    let z = DMatrix::from_fn(40, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let mix = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.0, 1.0, -0.7, 0.2, 0.0, 1.0]);
                    z * mix
                })
                .collect(),
        )
        .unwrap();
        let st = estimate_moments(&sums, &Priors::Empirical).unwrap();
        let a = avg_correlation(&st).unwrap();
        assert!((avg_correlation_from_sums(&sums).unwrap() - a).abs() < 1e-9);
        let flat = SumSamples::new(vec![DMatrix::from_element(3, 2, 1.0); 2]).unwrap();
        assert_eq!(avg_correlation_from_sums(&flat), Err(Error::ZeroVariance { class: 0, neuron: 0 }));
    }

    #[test]
    fn strict_argmax_ties() {
        assert_eq!(strict_argmax(&[1.0, 3.0, 2.0]), Some(1));
        assert_eq!(strict_argmax(&[3.0, 3.0, 2.0]), None);
        assert_eq!(strict_argmax(&[1.0, 3.0, 3.0]), None);
        assert_eq!(strict_argmax(&[3.0, 1.0, 1.0]), Some(0));
    }

    #[test]
    fn priors_validation() {
        assert!(Priors::Given(vec![0.5, 0.6]).resolve(&[1, 1]).is_err());
        assert!(Priors::Given(vec![0.5]).resolve(&[1, 1]).is_err());
        let p = Priors::Given(vec![0.25, 0.75]).resolve(&[1, 1]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
