//! Tools for judging predictions: sub-problems, bias lines, rank metrics, the
//! correlation diagnostic and the readout-only (surrogate activation) predictor.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng;
use crate::stats::{
    avg_correlation, compute_sums, estimate_moments, ActivationSet, Priors,
    ReadoutPerceptron, SumSamples,
};
use crate::theory::{self, PredictOptions, PredictionReport};

/// A subset of class indices, sorted and distinct.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubProblem {
    indices: Vec<usize>,
}

impl SubProblem {
    pub fn new(mut indices: Vec<usize>, classes: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("sub-problem indices repeat".into()));
        }
        if indices.len() < 2 {
            return Err(Error::InvalidInput("sub-problem needs at least 2 classes".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= classes) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: classes,
            });
        }
        Ok(Self { indices })
    }

    /// `size` classes drawn without replacement.
    pub fn random<R: Rng>(classes: usize, size: usize, rng: &mut R) -> Result<Self> {
        if size > classes {
            return Err(Error::InvalidInput(format!(
                "sub-problem of size {size} from {classes} classes"
            )));
        }
        Self::new(sample(rng, classes, size).into_vec(), classes)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn size(&self) -> usize {
        self.indices.len()
    }
}

/// Keeps the samples and readout rows of the chosen classes, renumbered densely.
pub fn restrict(
    acts: &ActivationSet,
    readout: &ReadoutPerceptron,
    sub: &SubProblem,
) -> Result<(ActivationSet, ReadoutPerceptron)> {
    let d = readout.num_classes().min(acts.num_classes());
    if let Some(&bad) = sub.indices().iter().find(|&&i| i >= d) {
        return Err(Error::IndexOutOfRange { index: bad, len: d });
    }
    let classes = sub.indices().iter().map(|&i| acts.class(i).clone()).collect();
    let weights = readout.weights().select_rows(sub.indices().iter());
    let bias = readout
        .bias()
        .map(|b| b.select_rows(sub.indices().iter()));
    Ok((
        ActivationSet::new(classes)?,
        ReadoutPerceptron::new(weights, bias, readout.similarity())?,
    ))
}

/// Sum-level equivalent of [`restrict`]: each output neuron only depends on its own row.
pub fn restrict_sums(sums: &SumSamples, sub: &SubProblem) -> Result<SumSamples> {
    let d = sums.num_classes();
    if let Some(&bad) = sub.indices().iter().find(|&&i| i >= d) {
        return Err(Error::IndexOutOfRange { index: bad, len: d });
    }
    SumSamples::new(
        sub.indices()
            .iter()
            .map(|&i| sums.class(i).select_columns(sub.indices().iter()))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalAccuracy {
    pub per_class: Vec<f64>,
    /// Correct decisions over all samples.
    pub aggregate: f64,
}

impl EmpiricalAccuracy {
    pub fn from_sums(sums: &SumSamples) -> Self {
        let per_class = sums.per_class_accuracy();
        let counts = sums.counts();
        let total: usize = counts.iter().sum();
        let hits: f64 = per_class.iter().zip(&counts).map(|(a, &c)| a * c as f64).sum();
        Self {
            per_class,
            aggregate: hits / total as f64,
        }
    }

    pub fn balanced(&self) -> f64 {
        self.per_class.iter().sum::<f64>() / self.per_class.len() as f64
    }
}

/// Winner-take-all accuracy; a tied maximum is a miss.
pub fn empirical_accuracy(acts: &ActivationSet, readout: &ReadoutPerceptron) -> Result<EmpiricalAccuracy> {
    Ok(EmpiricalAccuracy::from_sums(&compute_sums(acts, readout)?))
}

/// `actual ~ slope * predicted + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasLine {
    pub slope: f64,
    pub intercept: f64,
}

/// Ordinary least squares on `(predicted, actual)` pairs.
pub fn fit_bias_line(pairs: &[(f64, f64)]) -> Result<BiasLine> {
    if pairs.len() < 2 {
        return Err(Error::InvalidInput("bias line needs at least 2 points".into()));
    }
    if pairs.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::NonFinite("bias line points"));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidInput("predicted values have no spread".into()));
    }
    let slope = sxy / sxx;
    Ok(BiasLine {
        slope,
        intercept: my - slope * mx,
    })
}

pub fn compensate(pred: f64, line: &BiasLine) -> f64 {
    (line.slope * pred + line.intercept).clamp(0.0, 1.0)
}

fn check_pair(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
            context: "correlation inputs",
        });
    }
    if xs.len() < 2 {
        return Err(Error::InvalidInput("correlation needs at least 2 points".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correlation inputs"));
    }
    Ok(())
}

/// Pearson's r via one-pass co-moment updates.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs, ys)?;
    let (mut mx, mut my, mut cxx, mut cyy, mut cxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        let n = (k + 1) as f64;
        let dx = x - mx;
        let dy = y - my;
        mx += dx / n;
        my += dy / n;
        cxx += dx * (x - mx);
        cyy += dy * (y - my);
        cxy += dx * (y - my);
    }
    if cxx <= 0.0 || cyy <= 0.0 {
        return Err(Error::InvalidInput("correlation of a constant sequence".into()));
    }
    Ok((cxy / (cxx * cyy).sqrt()).clamp(-1.0, 1.0))
}

fn tie_pairs<T: PartialEq>(sorted: &[T]) -> i64 {
    let mut total = 0i64;
    let mut run = 1i64;
    for k in 1..=sorted.len() {
        if k < sorted.len() && sorted[k] == sorted[k - 1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total
}

/// Stable merge sort of `v`, returning the number of inversions removed.
fn sort_count_swaps(v: &mut [f64], buf: &mut [f64]) -> i64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_count_swaps(&mut v[..mid], &mut buf[..mid]);
    swaps += sort_count_swaps(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as i64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Tie-corrected Kendall tau (tau-b), O(n log n).
pub fn kendall_tau(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs, ys)?;
    let n = xs.len() as i64;
    let mut pairs: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n0 = n * (n - 1) / 2;
    let xs_sorted: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let n1 = tie_pairs(&xs_sorted);
    let n3 = tie_pairs(&pairs);
    let mut y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; y.len()];
    let swaps = sort_count_swaps(&mut y, &mut buf);
    let n2 = tie_pairs(&y);
    tau_b(n0 - n1 - n2 + n3 - 2 * swaps, n0, n1, n2)
}

/// `s / sqrt((n0 - n1)(n0 - n2))` with `s` = concordant minus discordant pairs,
/// `n1`, `n2` the pairs tied in x and in y.
pub fn tau_b(s: i64, n0: i64, n1: i64, n2: i64) -> Result<f64> {
    let denom = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
    if denom == 0.0 {
        return Err(Error::InvalidInput("rank correlation of a constant sequence".into()));
    }
    Ok(s as f64 / denom)
}

/// How far a network's true accuracy sits from the independent-Gaussian prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasPoint {
    pub accuracy: f64,
    pub predicted: f64,
    /// `accuracy - predicted`.
    pub difference: f64,
    pub avg_correlation: f64,
}

pub fn bias_point(sums: &SumSamples) -> Result<BiasPoint> {
    let stats = estimate_moments(sums, &Priors::Empirical)?;
    let predicted = theory::report_eq2(&stats)?.aggregate;
    let accuracy = EmpiricalAccuracy::from_sums(sums).aggregate;
    Ok(BiasPoint {
        accuracy,
        predicted,
        difference: accuracy - predicted,
        avg_correlation: avg_correlation(&stats)?,
    })
}

pub fn bias_vs_correlation(networks: &[(ActivationSet, ReadoutPerceptron)]) -> Result<Vec<BiasPoint>> {
    networks
        .par_iter()
        .map(|(acts, readout)| bias_point(&compute_sums(acts, readout)?))
        .collect()
}

/// One point of a sub-problem scatter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatterRow {
    pub predicted: f64,
    /// Mean per-class accuracy (matching the uniform priors of the prediction).
    pub actual: f64,
    pub size: usize,
    pub network: usize,
}

/// For every network and size, `per_size` random sub-problems; sizes above a network's
/// class count are skipped. Sub-problem `r` of size `s` on network `k` is drawn with seed
/// `derive(seed, [k, s, r])`, which also seeds any Monte Carlo inside the prediction.
pub fn subproblem_scatter(
    networks: &[SumSamples],
    sizes: &[usize],
    per_size: usize,
    opts: &PredictOptions,
    seed: u64,
) -> Result<Vec<ScatterRow>> {
    let mut jobs = Vec::new();
    for (k, sums) in networks.iter().enumerate() {
        for &s in sizes {
            if s >= 2 && s <= sums.num_classes() {
                jobs.extend((0..per_size).map(|r| (k, s, r)));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(k, s, r)| {
            let sub_seed = rng::derive(seed, &[k as u64, s as u64, r as u64]);
            let sub = SubProblem::random(networks[k].num_classes(), s, &mut rng::rng(sub_seed))?;
            let sums = restrict_sums(&networks[k], &sub)?;
            let o = PredictOptions {
                seed: sub_seed,
                ..*opts
            };
            let predicted = theory::predict_from_sums(&sums, &Priors::Uniform, &o)?.aggregate;
            Ok(ScatterRow {
                predicted,
                actual: EmpiricalAccuracy::from_sums(&sums).balanced(),
                size: s,
                network: k,
            })
        })
        .collect()
}

/// Surrogate activations for class `i`: `reps` copies of filter `i` plus white noise whose
/// total power sits `noise_db` below the filter's power.
pub fn surrogate_activations(
    readout: &ReadoutPerceptron,
    noise_db: f64,
    reps: usize,
    seed: u64,
) -> Result<ActivationSet> {
    if reps < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 repetitions, got {reps}")));
    }
    if noise_db.is_nan() {
        return Err(Error::NonFinite("noise level"));
    }
    let w = readout.weights();
    let n = w.ncols();
    let classes = w
        .row_iter()
        .enumerate()
        .map(|(i, f)| {
            let power = f.norm_squared();
            if power == 0.0 {
                return Err(Error::ZeroNorm("readout filter"));
            }
            let sd = (power / 10f64.powf(noise_db / 10.0) / n as f64).sqrt();
            let noise = Normal::new(0.0, sd).map_err(|e| Error::InvalidInput(e.to_string()))?;
            let mut r = rng::rng(rng::derive(seed, &[i as u64]));
            Ok(DMatrix::from_fn(reps, n, |_, c| f[c] + noise.sample(&mut r)))
        })
        .collect::<Result<Vec<_>>>()?;
    ActivationSet::new(classes)
}

/// Predicted accuracy from the readout alone, using noisy copies of its filters as data.
pub fn readout_only_predict(
    readout: &ReadoutPerceptron,
    noise_db: f64,
    reps: usize,
    seed: u64,
) -> Result<PredictionReport> {
    let acts = surrogate_activations(readout, noise_db, reps, seed)?;
    let sums = compute_sums(&acts, readout)?;
    theory::report_eq2(&estimate_moments(&sums, &Priors::Empirical)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseLevel {
    pub db: f64,
    /// Std of the predictions across readouts, averaged over experiments.
    pub mean_std: f64,
    /// Per readout, prediction averaged over experiments.
    pub mean_prediction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseSweep {
    pub levels: Vec<NoiseLevel>,
    /// Level with the largest spread; `None` with fewer than 2 readouts or no spread.
    pub selected_db: Option<f64>,
}

fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Readout-only predictions over a grid of noise levels. Experiment `e` on readout `r`
/// uses seed `derive(seed, [e, r])` at every level. Ties in spread go to the lower level.
pub fn noise_sweep(
    readouts: &[ReadoutPerceptron],
    db_grid: &[f64],
    reps: usize,
    experiments: usize,
    seed: u64,
) -> Result<NoiseSweep> {
    if readouts.is_empty() || db_grid.is_empty() || experiments == 0 {
        return Err(Error::InvalidInput("noise sweep needs readouts, levels and experiments".into()));
    }
    let mut grid = db_grid.to_vec();
    if grid.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("noise grid"));
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let levels = grid
        .par_iter()
        .map(|&db| {
            let mut std_sum = 0.0;
            let mut pred_sum = vec![0.0; readouts.len()];
            for e in 0..experiments {
                let preds = readouts
                    .iter()
                    .enumerate()
                    .map(|(r, ro)| {
                        readout_only_predict(ro, db, reps, rng::derive(seed, &[e as u64, r as u64]))
                            .map(|p| p.aggregate)
                    })
                    .collect::<Result<Vec<_>>>()?;
                std_sum += sample_std(&preds);
                pred_sum.iter_mut().zip(&preds).for_each(|(s, p)| *s += p);
            }
            let k = experiments as f64;
            Ok(NoiseLevel {
                db,
                mean_std: std_sum / k,
                mean_prediction: pred_sum.into_iter().map(|s| s / k).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut selected = None;
    if readouts.len() >= 2 {
        let mut best = 0.0;
        for l in &levels {
            if l.mean_std > best {
                best = l.mean_std;
                selected = Some(l.db);
            }
        }
    }
    Ok(NoiseSweep {
        levels,
        selected_db: selected,
    })
}
