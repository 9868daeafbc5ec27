//! Shallow randomly connected classifiers: a fixed random encoder followed by a
//! centroid or ridge readout, with stratified cross-validation and grid search.
//!
//! The encoder is `h = f_kappa(W_in x + b)` with `W_in ~ U[-1, 1]`, `b ~ U[-kappa, kappa]`
//! and `f_kappa` the clipping nonlinearity. It is a generic RVFL stand-in, not a
//! density-quantized encoder; everything downstream only sees the activations.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::esn::clip;
use crate::ridge::{one_hot, RidgeSolver};
use crate::stats::{
    estimate_moments_diagonal, strict_argmax, MomentStats, Priors, ReadoutPerceptron, Similarity,
    SumSamples,
};
use crate::{io, rng, theory};

/// Labeled tabular data with features min-max scaled to `[0, 1]` per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: DMatrix<f64>,
    labels: Vec<usize>,
    classes: usize,
}

impl Dataset {
    /// Normalizes `raw` column-wise; constant columns become 0.
    pub fn new(name: impl Into<String>, raw: DMatrix<f64>, labels: Vec<usize>) -> Result<Self> {
        if raw.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: raw.nrows(),
                got: labels.len(),
                context: "labels vs feature rows",
            });
        }
        if raw.nrows() == 0 || raw.ncols() == 0 {
            return Err(Error::InvalidInput("dataset is empty".into()));
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset features"));
        }
        let classes = labels.iter().max().map_or(0, |m| m + 1);
        if classes < 2 {
            return Err(Error::InvalidInput("dataset needs at least 2 classes".into()));
        }
        let mut counts = vec![0usize; classes];
        for &l in &labels {
            counts[l] += 1;
        }
        if let Some(c) = counts.iter().position(|&c| c == 0) {
            return Err(Error::InsufficientSamples {
                class: c,
                got: 0,
                need: 1,
            });
        }
        let mut features = raw;
        for mut col in features.column_iter_mut() {
            let lo = col.min();
            let span = col.max() - lo;
            for v in col.iter_mut() {
                *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
            }
        }
        Ok(Self {
            name: name.into(),
            features,
            labels,
            classes,
        })
    }

    pub fn from_labeled(name: impl Into<String>, rows: &[(usize, Vec<f64>)]) -> Result<Self> {
        let f = rows.first().map_or(0, |r| r.1.len());
        let raw = DMatrix::from_fn(rows.len(), f, |r, c| rows[r].1[c]);
        Self::new(name, raw, rows.iter().map(|r| r.0).collect())
    }

    /// Reads a `label,f1,...,fF` file; the dataset is named after the file stem.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::from_labeled(name, &io::read_labeled(path)?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features.ncols()
    }

    /// Same features with the labels permuted.
    pub fn shuffled_labels(&self, seed: u64) -> Self {
        let mut labels = self.labels.clone();
        labels.shuffle(&mut rng::rng(seed));
        Self {
            name: format!("{}-shuffled", self.name),
            labels,
            ..self.clone()
        }
    }
}

/// Isotropic Gaussian blobs, `per_class` points around each center.
pub fn gaussian_blobs(centers: &[Vec<f64>], sd: f64, per_class: usize, seed: u64) -> Result<Dataset> {
    let f = centers.first().map_or(0, |c| c.len());
    if centers.iter().any(|c| c.len() != f) {
        return Err(Error::InvalidInput("blob centers differ in dimension".into()));
    }
    let noise = Normal::new(0.0, sd).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut r = rng::rng(seed);
    let m = centers.len() * per_class;
    let mut raw = DMatrix::zeros(m, f);
    let mut labels = Vec::with_capacity(m);
    for (i, c) in centers.iter().enumerate() {
        for k in 0..per_class {
            let row = i * per_class + k;
            for j in 0..f {
                raw[(row, j)] = c[j] + noise.sample(&mut r);
            }
            labels.push(i);
        }
    }
    Dataset::new("blobs", raw, labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EncoderConfig {
    /// Hidden units.
    pub n: usize,
    pub kappa: f64,
    pub seed: u64,
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("encoder needs at least one hidden unit".into()));
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::InvalidInput(format!("kappa must be > 0, got {}", self.kappa)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    w_in: DMatrix<f64>,
    bias: DVector<f64>,
    kappa: f64,
}

impl Encoder {
    pub fn new(cfg: &EncoderConfig, features: usize) -> Result<Self> {
        cfg.validate()?;
        let mut r = rng::rng(cfg.seed);
        let w_in = DMatrix::from_fn(cfg.n, features, |_, _| r.random_range(-1.0..=1.0));
        let bias = DVector::from_fn(cfg.n, |_, _| r.random_range(-cfg.kappa..=cfg.kappa));
        Ok(Self {
            w_in,
            bias,
            kappa: cfg.kappa,
        })
    }

    pub fn from_parts(w_in: DMatrix<f64>, bias: DVector<f64>, kappa: f64) -> Result<Self> {
        if w_in.nrows() != bias.len() {
            return Err(Error::DimensionMismatch {
                expected: w_in.nrows(),
                got: bias.len(),
                context: "encoder bias length",
            });
        }
        Ok(Self { w_in, bias, kappa })
    }

    pub fn dim(&self) -> usize {
        self.w_in.nrows()
    }

    pub fn encode(&self, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.w_in.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.w_in.ncols(),
                got: x.len(),
                context: "encoder input features",
            });
        }
        let pre = &self.w_in * DVector::from_column_slice(x) + &self.bias;
        Ok(pre.map(|v| clip(v, self.kappa)))
    }

    /// Encodes every row of `x` (`M x F`), returning `M x N`.
    pub fn encode_all(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.w_in.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.w_in.ncols(),
                got: x.ncols(),
                context: "encoder input features",
            });
        }
        let mut h = x * self.w_in.transpose();
        for mut row in h.row_iter_mut() {
            row += self.bias.transpose();
        }
        Ok(h.map(|v| clip(v, self.kappa)))
    }
}

/// Readout trained on top of the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ShallowReadout {
    Centroid,
    Ridge { lambda: f64 },
}

fn check_labels(h: &DMatrix<f64>, labels: &[usize], classes: usize) -> Result<Vec<usize>> {
    if h.nrows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            got: labels.len(),
            context: "labels vs encoded rows",
        });
    }
    let mut counts = vec![0usize; classes];
    for &l in labels {
        if l >= classes {
            return Err(Error::IndexOutOfRange {
                index: l,
                len: classes,
            });
        }
        counts[l] += 1;
    }
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InsufficientSamples {
            class: c,
            got: 0,
            need: 1,
        });
    }
    Ok(counts)
}

/// Row `i` is the superposition of the encoded class-`i` samples; cosine similarity.
pub fn centroid_readout(h: &DMatrix<f64>, labels: &[usize], classes: usize) -> Result<ReadoutPerceptron> {
    check_labels(h, labels, classes)?;
    let mut w = DMatrix::zeros(classes, h.ncols());
    for (row, &l) in h.row_iter().zip(labels) {
        let mut target = w.row_mut(l);
        target += row;
    }
    ReadoutPerceptron::new(w, None, Similarity::Cosine)
}

/// Ridge regression onto one-hot targets; dot similarity.
pub fn ridge_readout(
    h: &DMatrix<f64>,
    labels: &[usize],
    classes: usize,
    lambda: f64,
) -> Result<ReadoutPerceptron> {
    check_labels(h, labels, classes)?;
    let solver = RidgeSolver::new(h, lambda)?;
    let w = solver.solve(h, &one_hot(labels, classes));
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    ReadoutPerceptron::new(w, None, Similarity::Dot)
}

pub fn train_readout(
    h: &DMatrix<f64>,
    labels: &[usize],
    classes: usize,
    kind: ShallowReadout,
) -> Result<ReadoutPerceptron> {
    match kind {
        ShallowReadout::Centroid => centroid_readout(h, labels, classes),
        ShallowReadout::Ridge { lambda } => ridge_readout(h, labels, classes, lambda),
    }
}

/// Fold index for every sample; each class is shuffled and dealt round-robin.
pub fn stratified_folds(labels: &[usize], classes: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 folds, got {k}")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (idx, &l) in labels.iter().enumerate() {
        if l >= classes {
            return Err(Error::IndexOutOfRange {
                index: l,
                len: classes,
            });
        }
        by_class[l].push(idx);
    }
    let mut r = rng::rng(seed);
    let mut fold = vec![0usize; labels.len()];
    // continue dealing where the previous class stopped so fold sizes stay balanced
    let mut next = 0usize;
    for (c, idx) in by_class.iter_mut().enumerate() {
        if idx.len() < k {
            return Err(Error::InsufficientSamples {
                class: c,
                got: idx.len(),
                need: k,
            });
        }
        idx.shuffle(&mut r);
        for &i in idx.iter() {
            fold[i] = next % k;
            next += 1;
        }
    }
    Ok(fold)
}

fn group_sums(sums: &DMatrix<f64>, labels: &[usize], classes: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new(); classes];
    for (row, &l) in sums.row_iter().zip(labels) {
        out[l].extend(row.iter());
    }
    out
}

fn to_sum_samples(flat: Vec<Vec<f64>>, classes: usize) -> Result<SumSamples> {
    SumSamples::new(
        flat.into_iter()
            .map(|v| DMatrix::from_row_slice(v.len() / classes, classes, &v))
            .collect(),
    )
}

fn eq2_aggregate(sums: &SumSamples) -> Result<(MomentStats, f64)> {
    let stats = estimate_moments_diagonal(sums, &Priors::Empirical)?;
    let a = theory::report_eq2(&stats)?.aggregate;
    Ok((stats, a))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub accuracy: f64,
    pub pred_eq2_train: f64,
    pub pred_eq2_test: f64,
}

#[derive(Debug, Clone)]
pub struct CvResult {
    /// Mean test-fold accuracy.
    pub accuracy: f64,
    pub folds: Vec<FoldResult>,
    /// Training-fold sums pooled over all folds.
    pub train_stats: MomentStats,
    /// Test-fold sums pooled over all folds.
    pub test_stats: MomentStats,
    pub pred_eq2_train: f64,
    pub pred_eq2_test: f64,
}

struct FoldOutput {
    result: FoldResult,
    train: Vec<Vec<f64>>,
    test: Vec<Vec<f64>>,
}

fn run_fold(
    ds: &Dataset,
    enc_cfg: &EncoderConfig,
    kind: ShallowReadout,
    assignment: &[usize],
    f: usize,
) -> Result<FoldOutput> {
    let d = ds.num_classes();
    let (train_idx, test_idx): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| assignment[i] != f);
    let rows = |idx: &[usize]| ds.features().select_rows(idx.iter());
    let labels = |idx: &[usize]| idx.iter().map(|&i| ds.labels()[i]).collect::<Vec<_>>();
    let (y_train, y_test) = (labels(&train_idx), labels(&test_idx));

    let cfg = EncoderConfig {
        seed: rng::derive(enc_cfg.seed, &[f as u64]),
        ..*enc_cfg
    };
    let enc = Encoder::new(&cfg, ds.num_features())?;
    let h_train = enc.encode_all(&rows(&train_idx))?;
    let h_test = enc.encode_all(&rows(&test_idx))?;
    let readout = train_readout(&h_train, &y_train, d, kind)?;

    let s_train = readout.apply(&h_train)?;
    let s_test = readout.apply(&h_test)?;
    let mut hits = 0usize;
    let mut buf = vec![0.0; d];
    for (row, &l) in s_test.row_iter().zip(&y_test) {
        buf.iter_mut().zip(row.iter()).for_each(|(b, v)| *b = *v);
        if strict_argmax(&buf) == Some(l) {
            hits += 1;
        }
    }
    let train = group_sums(&s_train, &y_train, d);
    let test = group_sums(&s_test, &y_test, d);
    let (_, pred_eq2_train) = eq2_aggregate(&to_sum_samples(train.clone(), d)?)?;
    let (_, pred_eq2_test) = eq2_aggregate(&to_sum_samples(test.clone(), d)?)?;
    Ok(FoldOutput {
        result: FoldResult {
            fold: f,
            accuracy: hits as f64 / test_idx.len() as f64,
            pred_eq2_train,
            pred_eq2_test,
        },
        train,
        test,
    })
}

/// Stratified k-fold cross-validation. Fold `f` uses encoder seed `derive(enc.seed, [f])`;
/// the fold split itself is seeded by `fold_seed`.
pub fn cross_validate(
    ds: &Dataset,
    enc: &EncoderConfig,
    kind: ShallowReadout,
    folds: usize,
    fold_seed: u64,
) -> Result<CvResult> {
    enc.validate()?;
    let d = ds.num_classes();
    let assignment = stratified_folds(ds.labels(), d, folds, fold_seed)?;
    let outputs = (0..folds)
        .into_par_iter()
        .map(|f| run_fold(ds, enc, kind, &assignment, f))
        .collect::<Result<Vec<_>>>()?;

    let mut train = vec![Vec::new(); d];
    let mut test = vec![Vec::new(); d];
    for o in &outputs {
        for c in 0..d {
            train[c].extend_from_slice(&o.train[c]);
            test[c].extend_from_slice(&o.test[c]);
        }
    }
    let (train_stats, pred_eq2_train) = eq2_aggregate(&to_sum_samples(train, d)?)?;
    let (test_stats, pred_eq2_test) = eq2_aggregate(&to_sum_samples(test, d)?)?;
    let folds: Vec<FoldResult> = outputs.into_iter().map(|o| o.result).collect();
    let accuracy = folds.iter().map(|f| f.accuracy).sum::<f64>() / folds.len() as f64;
    Ok(CvResult {
        accuracy,
        folds,
        train_stats,
        test_stats,
        pred_eq2_train,
        pred_eq2_test,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub ns: Vec<usize>,
    /// Ignored by centroid readouts.
    pub lambdas: Vec<f64>,
    pub kappas: Vec<f64>,
}

impl Grid {
    /// Hidden sizes 50..=1500 step 50, lambda 2^-10..=2^5, kappa in {1, 3, 5, 7}.
    pub fn full() -> Self {
        Self {
            ns: (1..=30).map(|k| 50 * k).collect(),
            lambdas: (-10..=5).map(|e| 2f64.powi(e)).collect(),
            kappas: vec![1.0, 3.0, 5.0, 7.0],
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridCell {
    pub n: usize,
    pub lambda: Option<f64>,
    pub lambda_index: usize,
    pub kappa: f64,
    pub cv: CvResult,
}

#[derive(Debug, Clone)]
pub struct GridResult {
    /// Index into `cells` of the winner.
    pub best: usize,
    /// Sorted by (N, lambda, kappa).
    pub cells: Vec<GridCell>,
}

impl GridResult {
    pub fn best(&self) -> &GridCell {
        &self.cells[self.best]
    }
}

/// Exhaustive search for the best CV accuracy. Ties go to smaller N, then smaller
/// lambda, then smaller kappa. Cell encoder seeds are `derive(seed, [N, lambda_index,
/// kappa bits])`, refined per fold; all cells share one fold split.
pub fn grid_search(
    ds: &Dataset,
    grid: &Grid,
    centroid: bool,
    folds: usize,
    seed: u64,
) -> Result<GridResult> {
    let mut ns = grid.ns.clone();
    ns.sort_unstable();
    ns.dedup();
    let mut lambdas: Vec<Option<f64>> = if centroid {
        vec![None]
    } else {
        grid.lambdas.iter().map(|&l| Some(l)).collect()
    };
    lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut kappas = grid.kappas.clone();
    kappas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if ns.is_empty() || lambdas.is_empty() || kappas.is_empty() {
        return Err(Error::InvalidInput("grid is empty".into()));
    }
    let mut specs = Vec::new();
    for &n in &ns {
        for (li, &lambda) in lambdas.iter().enumerate() {
            for &kappa in &kappas {
                specs.push((n, li, lambda, kappa));
            }
        }
    }
    let fold_seed = rng::derive(seed, &[u64::MAX]);
    let cells = specs
        .into_par_iter()
        .map(|(n, li, lambda, kappa)| {
            let enc = EncoderConfig {
                n,
                kappa,
                seed: rng::derive(seed, &[n as u64, li as u64, kappa.to_bits()]),
            };
            let kind = match lambda {
                None => ShallowReadout::Centroid,
                Some(lambda) => ShallowReadout::Ridge { lambda },
            };
            let cv = cross_validate(ds, &enc, kind, folds, fold_seed)?;
            Ok(GridCell {
                n,
                lambda,
                lambda_index: li,
                kappa,
                cv,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (k, c) in cells.iter().enumerate() {
        if c.cv.accuracy > cells[best].cv.accuracy {
            best = k;
        }
    }
    Ok(GridResult { best, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> Dataset {
        gaussian_blobs(&[vec![0.0, 0.0], vec![6.0, 6.0]], 1.0, 100, 4).unwrap()
    }

    #[test]
    fn normalization_to_unit_range() {
        let raw = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 3.0, 5.0, 2.0, 5.0]);
        let ds = Dataset::new("t", raw, vec![0, 1, 1]).unwrap();
        assert_eq!(ds.features().column(0).as_slice(), &[0.0, 1.0, 0.5]);
        assert_eq!(ds.features().column(1).as_slice(), &[0.0, 0.0, 0.0]);
        assert!(Dataset::new("t", DMatrix::zeros(2, 1), vec![0, 2]).is_err());
    }

    #[test]
    fn encoder_zero_input_zero_bias() {
        let enc = Encoder::from_parts(DMatrix::from_element(4, 3, 0.7), DVector::zeros(4), 1.0).unwrap();
        assert_eq!(enc.encode(&[0.0, 0.0, 0.0]).unwrap(), DVector::zeros(4));
    }

    #[test]
    fn encoder_bounds_and_determinism() {
        let cfg = EncoderConfig { n: 200, kappa: 3.0, seed: 5 };
        let a = Encoder::new(&cfg, 10).unwrap();
        let b = Encoder::new(&cfg, 10).unwrap();
        let x: Vec<f64> = (0..10).map(|k| k as f64 / 9.0).collect();
        let ha = a.encode(&x).unwrap();
        assert_eq!(ha, b.encode(&x).unwrap());
        assert!(ha.iter().all(|v| v.abs() <= 3.0));
        let all = a.encode_all(&DMatrix::from_row_slice(1, 10, &x)).unwrap();
        assert!((all.row(0).transpose() - ha).norm() < 1e-12);
    }

    #[test]
    fn centroid_rows() {
        let h = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -1.0, 0.5, 0.0]);
        let r = centroid_readout(&h, &[1, 0], 2).unwrap();
        assert_eq!(r.weights().row(0), h.row(1));
        assert_eq!(r.weights().row(1), h.row(0));

        let mut big = DMatrix::zeros(4, 3);
        big.rows_mut(0, 2).copy_from(&h);
        big.rows_mut(2, 2).copy_from(&h);
        let r2 = centroid_readout(&big, &[1, 0, 1, 0], 2).unwrap();
        assert_eq!(r2.weights(), &(r.weights() * 2.0));
        let probe = DMatrix::from_row_slice(2, 3, &[0.3, -0.2, 1.0, -2.0, 0.1, 0.4]);
        let (s1, s2) = (r.apply(&probe).unwrap(), r2.apply(&probe).unwrap());
        assert!((s1 - s2).norm() < 1e-12);

        let same = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let r3 = centroid_readout(&same, &[0, 1], 2).unwrap();
        assert_eq!(r3.weights().row(0), r3.weights().row(1));
        assert!(centroid_readout(&same, &[0, 0], 2).is_err());
    }

    #[test]
    fn ridge_identity() {
        let r = ridge_readout(&DMatrix::identity(3, 3), &[0, 1, 2], 3, 0.0).unwrap();
        assert!((r.weights() - DMatrix::<f64>::identity(3, 3)).norm() < 1e-12);
        let r = ridge_readout(&DMatrix::identity(3, 3), &[0, 1, 2], 3, 1e12).unwrap();
        assert!(r.weights().norm() < 1e-9);
    }

    #[test]
    fn folds_are_stratified() {
        let labels: Vec<usize> = (0..53).map(|k| k % 3).collect();
        let f = stratified_folds(&labels, 3, 5, 1).unwrap();
        for c in 0..3 {
            let mut per = [0usize; 5];
            for (i, &l) in labels.iter().enumerate() {
                if l == c {
                    per[f[i]] += 1;
                }
            }
            assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
        }
        let mut sizes = [0usize; 5];
        f.iter().for_each(|&k| sizes[k] += 1);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert!(matches!(
            stratified_folds(&[0, 0, 1], 2, 2, 1),
            Err(Error::InsufficientSamples { class: 1, got: 1, need: 2 })
        ));
    }

    #[test]
    fn separable_blobs() {
        let ds = blobs();
        let enc = EncoderConfig { n: 100, kappa: 1.0, seed: 3 };
        let a5 = cross_validate(&ds, &enc, ShallowReadout::Ridge { lambda: 0.1 }, 5, 9).unwrap();
        let a2 = cross_validate(&ds, &enc, ShallowReadout::Ridge { lambda: 0.1 }, 2, 9).unwrap();
        assert!(a5.accuracy >= 0.95, "{}", a5.accuracy);
        assert!((a5.accuracy - a2.accuracy).abs() < 0.05);
        let c = cross_validate(&ds, &enc, ShallowReadout::Centroid, 5, 9).unwrap();
        assert!(c.accuracy >= 0.95, "{}", c.accuracy);
    }

    #[test]
    fn shuffled_labels_give_chance() {
        let ds = gaussian_blobs(&[vec![0.0; 3], vec![4.0; 3], vec![-4.0; 3]], 1.0, 100, 2)
            .unwrap()
            .shuffled_labels(11);
        let enc = EncoderConfig { n: 100, kappa: 3.0, seed: 3 };
        let cv = cross_validate(&ds, &enc, ShallowReadout::Ridge { lambda: 1.0 }, 5, 1).unwrap();
        assert!((cv.accuracy - 1.0 / 3.0).abs() < 0.1, "{}", cv.accuracy);
    }

    #[test]
    fn grid_singleton_and_tie_break() {
        let ds = blobs();
        let g = Grid { ns: vec![50], lambdas: vec![0.5], kappas: vec![3.0] };
        let r = grid_search(&ds, &g, false, 3, 1).unwrap();
        assert_eq!(r.cells.len(), 1);
        assert_eq!((r.best().n, r.best().lambda, r.best().kappa), (50, Some(0.5), 3.0));

        // every config separates the blobs perfectly, so the smallest N must win
        let far = gaussian_blobs(&[vec![0.0, 0.0], vec![50.0, 50.0]], 0.5, 30, 2).unwrap();
        let g = Grid { ns: vec![80, 60], lambdas: vec![0.1], kappas: vec![1.0] };
        let r = grid_search(&far, &g, false, 3, 1).unwrap();
        assert_eq!(r.cells[0].cv.accuracy, r.cells[1].cv.accuracy);
        assert_eq!(r.best().n, 60);
    }
}
