use std::path::Path;

use perceptor_core::analysis::{self, EmpiricalAccuracy};
use perceptor_core::nalgebra::DVector;
use perceptor_core::esn::{self, EsnConfig, ReadoutKind};
use perceptor_core::rvfl::{self, Dataset, Grid};
use perceptor_core::synth::{self, SweepGrid};
use perceptor_core::theory::{self, PredictOptions};
use perceptor_core::{
    avg_correlation_from_sums, compute_sums, io, ActivationSet, Error, Priors, ReadoutPerceptron,
    Similarity,
};

use crate::args::*;
use crate::output::{csv_row, provenance, provenance_json};
use crate::{CliError, CliResult};

fn file<T>(path: &Path, r: perceptor_core::Result<T>) -> CliResult<T> {
    r.map_err(|source| CliError::File {
        path: path.display().to_string(),
        source,
    })
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// `a..b` (inclusive), `a..b:step`, a comma list, or one value.
pub fn parse_usize_list(s: &str) -> CliResult<Vec<usize>> {
    let bad = || usage(format!("bad integer list '{s}'"));
    if let Some((a, rest)) = s.split_once("..") {
        let (b, step) = rest.split_once(':').unwrap_or((rest, "1"));
        let (a, b, step): (usize, usize, usize) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
            step.trim().parse().map_err(|_| bad())?,
        );
        if step == 0 || b < a {
            return Err(bad());
        }
        return Ok((a..=b).step_by(step).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

/// Comma list, `a..b[:step]` (inclusive, default step 1) or `2^a..b` for powers of two.
pub fn parse_f64_list(s: &str) -> CliResult<Vec<f64>> {
    let bad = || usage(format!("bad number list '{s}'"));
    let num = |t: &str| -> CliResult<f64> {
        let v: f64 = t.trim().parse().map_err(|_| bad())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad())
        }
    };
    if let Some(exp) = s.trim().strip_prefix("2^") {
        let (a, b) = exp.split_once("..").ok_or_else(bad)?;
        let (a, b): (i32, i32) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).map(|e| 2f64.powi(e)).collect());
    }
    if let Some((a, rest)) = s.split_once("..") {
        let (b, step) = rest.split_once(':').unwrap_or((rest, "1"));
        let (a, b, step) = (num(a)?, num(b)?, num(step)?);
        if step <= 0.0 || b < a {
            return Err(bad());
        }
        let count = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=count).map(|k| a + k as f64 * step).collect());
    }
    s.split(',').map(num).collect()
}

fn load_readout(weights: &Path, bias: Option<&Path>, similarity: Similarity) -> CliResult<ReadoutPerceptron> {
    let w = file(weights, io::read_matrix(weights))?;
    let b = match bias {
        None => None,
        Some(p) => {
            if similarity == Similarity::Cosine {
                return Err(usage("--bias only applies to dot similarity"));
            }
            let m = file(p, io::read_matrix(p))?;
            Some(DVector::from_iterator(m.len(), m.iter().copied()))
        }
    };
    file(weights, ReadoutPerceptron::new(w, b, similarity))
}

fn load_activations(path: &Path, classes: usize) -> CliResult<ActivationSet> {
    let rows = file(path, io::read_labeled(path))?;
    file(path, ActivationSet::from_labeled(&rows, classes))
}

fn predict_options(m: &MethodOpts, seed: u64) -> PredictOptions {
    PredictOptions {
        method: m.method.into(),
        mc_samples: m.mc_samples,
        seed,
        bandwidth: m.bandwidth,
    }
}

fn to_json(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values always serialize");
    s.push('\n');
    s
}

pub fn predict(cli: &Cli, a: &PredictArgs) -> CliResult<String> {
    let readout = load_readout(&a.weights, a.bias.as_deref(), a.similarity.into())?;
    let acts = load_activations(&a.activations, readout.num_classes())?;
    let sums = compute_sums(&acts, &readout)?;
    let priors = match a.priors {
        PriorsArg::Empirical => Priors::Empirical,
        PriorsArg::Uniform => Priors::Uniform,
    };
    let report = theory::predict_from_sums(&sums, &priors, &predict_options(&a.method, cli.seed))?;
    let corr = match avg_correlation_from_sums(&sums) {
        Ok(c) => serde_json::json!(c),
        Err(Error::ZeroVariance { .. } | Error::InsufficientSamples { .. }) => serde_json::Value::Null,
        Err(e) => return Err(e.into()),
    };
    let mut out = serde_json::json!({
        "provenance": provenance_json("predict", cli.seed),
        "classes": readout.num_classes(),
        "counts": sums.counts(),
        "report": report,
        "avg_correlation": corr,
    });
    if a.with_empirical {
        out["empirical"] = serde_json::to_value(EmpiricalAccuracy::from_sums(&sums)).expect("serializable");
    }
    Ok(to_json(&out))
}

pub fn esn(cli: &Cli, a: &EsnArgs) -> CliResult<String> {
    let amplitudes = a.amplitudes.as_deref().map(parse_f64_list).transpose()?;
    let cfg = EsnConfig {
        n: a.n,
        alphabet: a.d,
        kappa: a.kappa,
        delays: parse_usize_list(&a.delays)?,
        train_len: a.train_len,
        test_len: a.test_len,
        seed: cli.seed,
        readout: match a.readout {
            EsnReadoutArg::Codebook => ReadoutKind::Codebook,
            EsnReadoutArg::Regression => ReadoutKind::Regression,
        },
        ridge_lambda: a.lambda,
        similarity: a.similarity.into(),
        amplitudes,
        mc_samples: a.mc_samples,
    };
    let runs = esn::run_seeds(&cfg, a.seeds)?;
    let mut s = provenance("esn", cli.seed);
    s.push_str("delay,empirical,eq1,eq2,eq3_mc,stderr\n");
    for r in esn::average_curves(&runs) {
        s.push_str(&csv_row(&[
            r.delay.to_string(),
            r.empirical.to_string(),
            r.eq1.to_string(),
            r.eq2.to_string(),
            r.eq3_mc.to_string(),
            r.stderr.to_string(),
        ]));
    }
    Ok(s)
}

pub fn rvfl(cli: &Cli, a: &RvflArgs) -> CliResult<String> {
    let ds = file(&a.data, Dataset::load(&a.data))?;
    let grid = Grid {
        ns: parse_usize_list(&a.n)?,
        lambdas: parse_f64_list(&a.lambda)?,
        kappas: parse_f64_list(&a.kappa)?,
    };
    let centroid = a.readout == RvflReadoutArg::Centroid;
    let result = rvfl::grid_search(&ds, &grid, centroid, a.folds, cli.seed)?;
    let mut s = provenance("rvfl", cli.seed);
    s.push_str("N,lambda,kappa,fold,accuracy,pred_eq2_train,pred_eq2_test\n");
    let lambda_str = |l: Option<f64>| l.map_or("nan".to_string(), |v| v.to_string());
    for c in &result.cells {
        let head = [c.n.to_string(), lambda_str(c.lambda), c.kappa.to_string()];
        for f in &c.cv.folds {
            let mut row = head.to_vec();
            row.extend([
                f.fold.to_string(),
                f.accuracy.to_string(),
                f.pred_eq2_train.to_string(),
                f.pred_eq2_test.to_string(),
            ]);
            s.push_str(&csv_row(&row));
        }
        let mut row = head.to_vec();
        row.extend([
            "all".to_string(),
            c.cv.accuracy.to_string(),
            c.cv.pred_eq2_train.to_string(),
            c.cv.pred_eq2_test.to_string(),
        ]);
        s.push_str(&csv_row(&row));
    }
    let b = result.best();
    s.push_str(&format!(
        "# best: N={} lambda={} kappa={} accuracy={}\n",
        b.n,
        lambda_str(b.lambda),
        b.kappa,
        b.cv.accuracy
    ));
    Ok(s)
}

pub fn subproblem(cli: &Cli, a: &SubproblemArgs) -> CliResult<String> {
    if a.activations.len() != a.weights.len() {
        return Err(usage(format!(
            "{} --activations files but {} --weights files",
            a.activations.len(),
            a.weights.len()
        )));
    }
    let networks = a
        .activations
        .iter()
        .zip(&a.weights)
        .map(|(ap, wp)| {
            let readout = load_readout(wp, None, a.similarity.into())?;
            let acts = load_activations(ap, readout.num_classes())?;
            Ok(compute_sums(&acts, &readout)?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let sizes = parse_usize_list(&a.subproblem_sizes)?;
    let rows = analysis::subproblem_scatter(
        &networks,
        &sizes,
        a.per_size,
        &predict_options(&a.method, cli.seed),
        cli.seed,
    )?;
    let mut s = provenance("subproblem", cli.seed);
    s.push_str("predicted,actual,size,network\n");
    for r in &rows {
        s.push_str(&csv_row(&[
            r.predicted.to_string(),
            r.actual.to_string(),
            r.size.to_string(),
            r.network.to_string(),
        ]));
    }
    for k in 0..networks.len() {
        let pairs: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.network == k)
            .map(|r| (r.predicted, r.actual))
            .collect();
        if let Ok(line) = analysis::fit_bias_line(&pairs) {
            s.push_str(&format!(
                "# bias line network={k}: slope={} intercept={}\n",
                line.slope, line.intercept
            ));
        }
    }
    Ok(s)
}

pub fn readout_only(cli: &Cli, a: &ReadoutOnlyArgs) -> CliResult<String> {
    let readouts = a
        .weights
        .iter()
        .map(|p| load_readout(p, None, a.similarity.into()))
        .collect::<CliResult<Vec<_>>>()?;
    let grid = parse_f64_list(&a.noise_db)?;
    let sweep = analysis::noise_sweep(&readouts, &grid, a.reps, a.experiments, cli.seed)?;
    let mut s = provenance("readout-only", cli.seed);
    s.push_str("noise_db,network,predicted,std\n");
    for l in &sweep.levels {
        for (k, p) in l.mean_prediction.iter().enumerate() {
            s.push_str(&csv_row(&[
                l.db.to_string(),
                k.to_string(),
                p.to_string(),
                l.mean_std.to_string(),
            ]));
        }
    }
    s.push_str(&format!(
        "# selected_db: {}\n",
        sweep.selected_db.map_or("none".to_string(), |v| v.to_string())
    ));
    Ok(s)
}

/// Reads two named columns from a CSV whose first non-comment line is a header.
fn read_columns(path: &Path, x: &str, y: &str) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let text = file(path, std::fs::read_to_string(path).map_err(Error::from))?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let parse_err = |line, msg: String| CliError::File {
        path: path.display().to_string(),
        source: Error::Parse { line, msg },
    };
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "missing header row".into()))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| {
        names
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| parse_err(hl, format!("no column named '{name}'")))
    };
    let (cx, cy) = (col(x)?, col(y)?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (ln, l) in lines {
        let cells: Vec<&str> = l.split(',').collect();
        if cells.len() != names.len() {
            return Err(parse_err(ln, format!("expected {} fields, found {}", names.len(), cells.len())));
        }
        let num = |c: &str| -> CliResult<f64> {
            c.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(ln, format!("'{}' is not a number", c.trim())))
        };
        xs.push(num(cells[cx])?);
        ys.push(num(cells[cy])?);
    }
    Ok((xs, ys))
}

pub fn metrics(cli: &Cli, a: &MetricsArgs) -> CliResult<String> {
    let (xs, ys) = read_columns(&a.input, &a.x, &a.y)?;
    let pearson = analysis::pearson(&xs, &ys)?;
    let tau = analysis::kendall_tau(&xs, &ys)?;
    let pairs: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    let line = analysis::fit_bias_line(&pairs)?;
    let n = xs.len() as f64;
    let mae_raw = pairs.iter().map(|(p, t)| (p - t).abs()).sum::<f64>() / n;
    let mae_comp = pairs
        .iter()
        .map(|(p, t)| (analysis::compensate(*p, &line) - t).abs())
        .sum::<f64>()
        / n;
    Ok(to_json(&serde_json::json!({
        "provenance": provenance_json("metrics", cli.seed),
        "n": xs.len(),
        "pearson": pearson,
        "kendall_tau": tau,
        "bias_line": line,
        "mae_raw": mae_raw,
        "mae_compensated": mae_comp,
    })))
}

pub fn synth(cli: &Cli, a: &SynthArgs) -> CliResult<String> {
    let grid = SweepGrid {
        mus: parse_f64_list(&a.mu)?,
        sigmas: parse_f64_list(&a.sigma)?,
        rhos: parse_f64_list(&a.rho)?,
    };
    let rows = synth::sweep_surface(&grid, a.samples, cli.seed)?;
    let mut s = provenance("synth", cli.seed);
    s.push_str("mu,sigma,rho,eq2,closed_form,empirical,stderr\n");
    for r in rows {
        s.push_str(&csv_row(&[
            r.mu.to_string(),
            r.sigma.to_string(),
            r.rho.to_string(),
            r.eq2.to_string(),
            r.closed_form.to_string(),
            r.empirical.to_string(),
            r.stderr.to_string(),
        ]));
    }
    Ok(s)
}
