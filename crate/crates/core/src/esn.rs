//! Integer echo state network on the trajectory association task.
//!
//! Symbols from a `D`-letter alphabet are bipolar random vectors (the codebook). Each
//! step the hidden state is circularly shifted right by one, the current symbol's vector
//! is added, and the result is clipped to `[-kappa, kappa]`. Recall of the symbol seen
//! `d` steps ago is a winner-take-all readout over `D` linear filters, either built from
//! the codebook directly or fitted by ridge regression on a training sequence.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ridge::RidgeSolver;
use crate::rng;
use crate::stats::{
    estimate_moments, strict_argmax, MomentStats, Priors, ReadoutPerceptron, Similarity,
    SumSamples,
};
use crate::theory::{self, SharedDistractorStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReadoutKind {
    Codebook,
    Regression,
}

impl std::str::FromStr for ReadoutKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "codebook" => Ok(ReadoutKind::Codebook),
            "regression" => Ok(ReadoutKind::Regression),
            other => Err(Error::InvalidInput(format!("unknown ESN readout '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsnConfig {
    /// Hidden dimension N.
    pub n: usize,
    /// Alphabet size D.
    pub alphabet: usize,
    pub kappa: f64,
    pub delays: Vec<usize>,
    pub train_len: usize,
    pub test_len: usize,
    pub seed: u64,
    pub readout: ReadoutKind,
    pub ridge_lambda: f64,
    pub similarity: Similarity,
    /// Per-symbol scale applied to codebook columns before they enter the state.
    pub amplitudes: Option<Vec<f64>>,
    pub mc_samples: usize,
}

impl Default for EsnConfig {
    fn default() -> Self {
        Self {
            n: 100,
            alphabet: 2,
            kappa: 4.0,
            delays: (0..=10).collect(),
            train_len: 10_000,
            test_len: 10_000,
            seed: 0,
            readout: ReadoutKind::Codebook,
            ridge_lambda: 0.01,
            similarity: Similarity::Cosine,
            amplitudes: None,
            mc_samples: 100_000,
        }
    }
}

impl EsnConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.n < 1 {
            return bad("N must be >= 1".into());
        }
        if self.alphabet < 2 {
            return bad("D must be >= 2".into());
        }
        if !(self.kappa >= 1.0) {
            return bad(format!("kappa must be >= 1, got {}", self.kappa));
        }
        if self.delays.is_empty() {
            return bad("no delays requested".into());
        }
        let max_delay = *self.delays.iter().max().unwrap();
        if self.test_len <= max_delay {
            return bad(format!(
                "test length {} must exceed max delay {max_delay}",
                self.test_len
            ));
        }
        if self.readout == ReadoutKind::Regression && self.train_len <= max_delay {
            return bad(format!(
                "train length {} must exceed max delay {max_delay}",
                self.train_len
            ));
        }
        if !(self.ridge_lambda >= 0.0) {
            return bad("ridge lambda must be >= 0".into());
        }
        if let Some(a) = &self.amplitudes {
            if a.len() != self.alphabet || a.iter().any(|v| !v.is_finite()) {
                return bad("amplitudes must be finite, one per symbol".into());
            }
        }
        if self.mc_samples < 1 {
            return bad("mc samples must be >= 1".into());
        }
        Ok(())
    }
}

/// `N x D` matrix of random bipolar symbol vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    phi: DMatrix<f64>,
    amplitudes: Vec<f64>,
}

impl Codebook {
    pub fn random<R: Rng>(n: usize, d: usize, rng: &mut R) -> Self {
        let phi = DMatrix::from_fn(n, d, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
        Self {
            phi,
            amplitudes: vec![1.0; d],
        }
    }

    pub fn from_matrix(phi: DMatrix<f64>) -> Result<Self> {
        if phi.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidInput("codebook entries must be +-1".into()));
        }
        let d = phi.ncols();
        Ok(Self {
            phi,
            amplitudes: vec![1.0; d],
        })
    }

    pub fn with_amplitudes(mut self, amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.len() != self.phi.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.phi.ncols(),
                got: amplitudes.len(),
                context: "amplitudes",
            });
        }
        self.amplitudes = amplitudes;
        Ok(self)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn dim(&self) -> usize {
        self.phi.nrows()
    }

    pub fn symbols(&self) -> usize {
        self.phi.ncols()
    }
}

/// Saturating activation: `-kappa` below, `kappa` above, identity in between.
#[inline]
pub fn clip(x: f64, kappa: f64) -> f64 {
    if x <= -kappa {
        -kappa
    } else if x >= kappa {
        kappa
    } else {
        x
    }
}

pub fn clip_vec(x: &[f64], kappa: f64) -> Vec<f64> {
    x.iter().map(|&v| clip(v, kappa)).collect()
}

/// Circular shift right by `k` (the recurrent permutation applied `k` times).
pub fn rotate_right(v: &[f64], k: usize) -> Vec<f64> {
    let mut out = v.to_vec();
    if !v.is_empty() {
        out.rotate_right(k % v.len());
    }
    out
}

/// Circular shift left by `k`, the inverse of [`rotate_right`].
pub fn rotate_left(v: &[f64], k: usize) -> Vec<f64> {
    let mut out = v.to_vec();
    if !v.is_empty() {
        out.rotate_left(k % v.len());
    }
    out
}

/// Feeds `sequence` through the network from a zero state; row `t` of the result is
/// the state after symbol `sequence[t]`.
pub fn run_memorization(codebook: &Codebook, kappa: f64, sequence: &[usize]) -> Result<DMatrix<f64>> {
    let n = codebook.dim();
    let d = codebook.symbols();
    let mut trace = DMatrix::zeros(sequence.len(), n);
    let mut state = vec![0.0; n];
    let mut next = vec![0.0; n];
    for (t, &s) in sequence.iter().enumerate() {
        if s >= d {
            return Err(Error::IndexOutOfRange { index: s, len: d });
        }
        let amp = codebook.amplitudes[s];
        let col = codebook.phi.column(s);
        for k in 0..n {
            let shifted = state[(k + n - 1) % n];
            next[k] = clip(shifted + amp * col[k], kappa);
        }
        std::mem::swap(&mut state, &mut next);
        for k in 0..n {
            trace[(t, k)] = state[k];
        }
    }
    Ok(trace)
}

/// Readout for delay `d` built from the codebook: filter `i` is symbol `i`'s vector
/// permuted `d` times, so its response to a state equals the codebook match of the
/// state permuted back by `d`.
pub fn codebook_readout(codebook: &Codebook, d: usize, similarity: Similarity) -> Result<ReadoutPerceptron> {
    let n = codebook.dim();
    let mut w = DMatrix::zeros(codebook.symbols(), n);
    for i in 0..codebook.symbols() {
        let col: Vec<f64> = codebook.phi.column(i).iter().copied().collect();
        let row = rotate_right(&col, d);
        for k in 0..n {
            w[(i, k)] = row[k];
        }
    }
    ReadoutPerceptron::new(w, None, similarity)
}

/// Ridge readouts for several delays over one training trace, sharing the Gram matrix.
pub struct RegressionTrainer<'a> {
    states: &'a DMatrix<f64>,
    symbols: &'a [usize],
    alphabet: usize,
    gram: DMatrix<f64>,
}

impl<'a> RegressionTrainer<'a> {
    pub fn new(states: &'a DMatrix<f64>, symbols: &'a [usize], alphabet: usize) -> Result<Self> {
        if states.nrows() != symbols.len() {
            return Err(Error::DimensionMismatch {
                expected: states.nrows(),
                got: symbols.len(),
                context: "training states vs symbols",
            });
        }
        let gram = states.transpose() * states;
        Ok(Self {
            states,
            symbols,
            alphabet,
            gram,
        })
    }

    /// Fits filters mapping state `t` to the one-hot code of symbol `t - d`.
    pub fn readout(&self, d: usize, lambda: f64, similarity: Similarity) -> Result<ReadoutPerceptron> {
        let m = self.states.nrows();
        if d >= m {
            return Err(Error::InvalidInput(format!(
                "delay {d} leaves no training pairs ({m} states)"
            )));
        }
        let n = self.states.ncols();
        let mut gram = self.gram.clone();
        for t in 0..d {
            let row = self.states.row(t);
            gram -= row.transpose() * row;
        }
        let mut xty = DMatrix::zeros(n, self.alphabet);
        for t in d..m {
            let s = self.symbols[t - d];
            if s >= self.alphabet {
                return Err(Error::IndexOutOfRange {
                    index: s,
                    len: self.alphabet,
                });
            }
            let mut col = xty.column_mut(s);
            col += self.states.row(t).transpose();
        }
        let w = RidgeSolver::from_gram(gram, lambda)?.solve_cross(&xty);
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem);
        }
        ReadoutPerceptron::new(w, None, similarity)
    }
}

/// Single-delay regression readout.
pub fn regression_readout(
    states: &DMatrix<f64>,
    symbols: &[usize],
    alphabet: usize,
    d: usize,
    lambda: f64,
    similarity: Similarity,
) -> Result<ReadoutPerceptron> {
    RegressionTrainer::new(states, symbols, alphabet)?.readout(d, lambda, similarity)
}

/// Sums of every state at or after `d`, grouped by the symbol seen `d` steps earlier.
pub fn delayed_sums(
    trace: &DMatrix<f64>,
    sequence: &[usize],
    readout: &ReadoutPerceptron,
    d: usize,
) -> Result<SumSamples> {
    let m = trace.nrows();
    if d >= m {
        return Err(Error::InvalidInput(format!("delay {d} exceeds trace length {m}")));
    }
    let alphabet = readout.num_classes();
    let sums = readout.apply(&trace.rows(d, m - d).into_owned())?;
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); alphabet];
    for t in d..m {
        rows[sequence[t - d]].push(t - d);
    }
    let classes = rows
        .iter()
        .map(|idx| DMatrix::from_fn(idx.len(), alphabet, |r, c| sums[(idx[r], c)]))
        .collect();
    SumSamples::new(classes)
}

/// Fraction of `m >= d` whose readout argmax equals `sequence[m - d]` (ties miss).
pub fn recall_accuracy(
    trace: &DMatrix<f64>,
    sequence: &[usize],
    readout: &ReadoutPerceptron,
    d: usize,
) -> Result<f64> {
    let m = trace.nrows();
    if d >= m {
        return Err(Error::InvalidInput(format!("delay {d} exceeds trace length {m}")));
    }
    let sums = readout.apply(&trace.rows(d, m - d).into_owned())?;
    let mut hits = 0usize;
    let mut buf = vec![0.0; readout.num_classes()];
    for (r, row) in sums.row_iter().enumerate() {
        for (b, v) in buf.iter_mut().zip(row.iter()) {
            *b = *v;
        }
        if strict_argmax(&buf) == Some(sequence[r]) {
            hits += 1;
        }
    }
    Ok(hits as f64 / (m - d) as f64)
}

/// Statistics of the delayed sums in both the shared-distractor and per-class forms.
#[derive(Debug, Clone)]
pub struct EsnStats {
    pub shared: SharedDistractorStats,
    pub per_class: Vec<SharedDistractorStats>,
    pub moments: MomentStats,
    pub sums: SumSamples,
}

pub fn extract_esn_stats(
    trace: &DMatrix<f64>,
    sequence: &[usize],
    readout: &ReadoutPerceptron,
    d: usize,
) -> Result<EsnStats> {
    let sums = delayed_sums(trace, sequence, readout, d)?;
    let shared = SharedDistractorStats::from_sums(&sums)?;
    let per_class = SharedDistractorStats::per_class(&sums)?;
    let moments = estimate_moments(&sums, &Priors::Empirical)?;
    Ok(EsnStats {
        shared,
        per_class,
        moments,
        sums,
    })
}

/// Everything measured at one delay of one simulation.
#[derive(Debug, Clone, Serialize)]
pub struct DelayResult {
    pub delay: usize,
    pub empirical: f64,
    /// Shared-distractor model applied to each class's hit/reject statistics.
    pub eq1: f64,
    /// Shared-distractor model on hit/reject statistics pooled over classes.
    pub eq1_pooled: f64,
    pub eq2: f64,
    pub eq3_mc: f64,
    pub eq3_stderr: f64,
    pub shared: SharedDistractorStats,
    pub avg_correlation: f64,
}

fn random_sequence<R: Rng>(len: usize, alphabet: usize, rng: &mut R) -> Vec<usize> {
    (0..len).map(|_| rng.random_range(0..alphabet)).collect()
}

/// One full simulation (codebook, optional training run, test run, every delay).
pub fn simulate(cfg: &EsnConfig, seed: u64) -> Result<Vec<DelayResult>> {
    cfg.validate()?;
    let mut codebook = Codebook::random(cfg.n, cfg.alphabet, &mut rng::rng(rng::derive(seed, &[1])));
    if let Some(a) = &cfg.amplitudes {
        codebook = codebook.with_amplitudes(a.clone())?;
    }
    let test_seq = random_sequence(cfg.test_len, cfg.alphabet, &mut rng::rng(rng::derive(seed, &[2])));
    let test_trace = run_memorization(&codebook, cfg.kappa, &test_seq)?;

    let train = match cfg.readout {
        ReadoutKind::Codebook => None,
        ReadoutKind::Regression => {
            let seq =
                random_sequence(cfg.train_len, cfg.alphabet, &mut rng::rng(rng::derive(seed, &[3])));
            let trace = run_memorization(&codebook, cfg.kappa, &seq)?;
            Some((seq, trace))
        }
    };
    let trainer = train
        .as_ref()
        .map(|(seq, trace)| RegressionTrainer::new(trace, seq, cfg.alphabet))
        .transpose()?;

    cfg.delays
        .iter()
        .map(|&d| {
            let readout = match &trainer {
                None => codebook_readout(&codebook, d, cfg.similarity)?,
                Some(t) => t.readout(d, cfg.ridge_lambda, cfg.similarity)?,
            };
            let empirical = recall_accuracy(&test_trace, &test_seq, &readout, d)?;
            let st = extract_esn_stats(&test_trace, &test_seq, &readout, d)?;
            let eq1 = theory::report_eq1_per_class(&st.per_class, st.moments.priors())?.aggregate;
            let eq1_pooled = theory::predict_eq1(&st.shared)?;
            let eq2 = theory::report_eq2(&st.moments)?.aggregate;
            let mc = theory::report_eq3_mc(&st.moments, cfg.mc_samples, rng::derive(seed, &[4, d as u64]))?;
            Ok(DelayResult {
                delay: d,
                empirical,
                eq1,
                eq1_pooled,
                eq2,
                eq3_mc: mc.aggregate,
                eq3_stderr: mc.aggregate_stderr().unwrap_or(0.0),
                shared: st.shared,
                avg_correlation: crate::stats::avg_correlation(&st.moments).unwrap_or(f64::NAN),
            })
        })
        .collect()
}

/// Seed-averaged curve row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub delay: usize,
    pub empirical: f64,
    pub eq1: f64,
    pub eq2: f64,
    pub eq3_mc: f64,
    pub stderr: f64,
}

/// Runs `seeds` independent simulations (seed `k` derived from `cfg.seed` and `k`).
pub fn run_seeds(cfg: &EsnConfig, seeds: usize) -> Result<Vec<Vec<DelayResult>>> {
    cfg.validate()?;
    if seeds < 1 {
        return Err(Error::InvalidInput("need at least one seed".into()));
    }
    (0..seeds)
        .into_par_iter()
        .map(|k| simulate(cfg, rng::derive(cfg.seed, &[k as u64])))
        .collect()
}

/// Averages per-seed results into one row per delay.
pub fn average_curves(runs: &[Vec<DelayResult>]) -> Vec<CurveRow> {
    let n = runs.len() as f64;
    let delays = runs.first().map(|r| r.len()).unwrap_or(0);
    (0..delays)
        .map(|k| {
            let mean = |f: &dyn Fn(&DelayResult) -> f64| runs.iter().map(|r| f(&r[k])).sum::<f64>() / n;
            CurveRow {
                delay: runs[0][k].delay,
                empirical: mean(&|r| r.empirical),
                eq1: mean(&|r| r.eq1),
                eq2: mean(&|r| r.eq2),
                eq3_mc: mean(&|r| r.eq3_mc),
                stderr: runs.iter().map(|r| r[k].eq3_stderr.powi(2)).sum::<f64>().sqrt() / n,
            }
        })
        .collect()
}

/// Theoretical distractor std for codebook readouts at saturation (dot similarity).
pub fn distractor_sigma_theory(n: usize, kappa: f64) -> f64 {
    (n as f64 * kappa * (kappa + 1.0) / 3.0).sqrt()
}

pub fn column_vector(codebook: &Codebook, s: usize) -> DVector<f64> {
    codebook.phi.column(s).into_owned()
}
