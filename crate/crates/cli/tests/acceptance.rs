//! Acceptance suite. Runs without the libtest harness so every check prints one line.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use perceptor_core::analysis::{self, kendall_tau, pearson};
use perceptor_core::esn::{self, EsnConfig, ReadoutKind};
use perceptor_core::nalgebra::{DMatrix, DVector};
use perceptor_core::rvfl::{cross_validate, Dataset, EncoderConfig, ShallowReadout};
use perceptor_core::synth::{sweep_surface, SweepGrid};
use perceptor_core::theory::{predict_eq1, predict_eq2, predict_eq3_mc};
use perceptor_core::{MomentStats, ReadoutPerceptron, SharedDistractorStats, Similarity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Standard normal CDF by composite Simpson integration of the density.
fn phi_oracle(x: f64) -> f64 {
    let a = x.abs().min(40.0);
    let n = 20_000;
    let h = a / n as f64;
    let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = f(0.0) + f(a);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    let half = s * h / 3.0;
    if x >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

/// Argmax frequency of independent Gaussians, sampled directly.
fn independent_oracle(mu: &[f64], sigma: &[f64], class: usize, draws: usize, rng: &mut ChaCha20Rng) -> f64 {
    let mut hits = 0usize;
    let mut x = vec![0.0; mu.len()];
    for _ in 0..draws {
        for j in 0..mu.len() {
            let z: f64 = rng.sample(StandardNormal);
            x[j] = mu[j] + sigma[j] * z;
        }
        if (0..mu.len()).all(|j| j == class || x[j] < x[class]) {
            hits += 1;
        }
    }
    hits as f64 / draws as f64
}

fn closed_form_two_class() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let mu_h = rng.random_range(-3.0..3.0);
        let mu_r = rng.random_range(-3.0..3.0);
        let sigma_h = rng.random_range(0.1..3.0);
        let sigma_r = rng.random_range(0.1..3.0);
        let s = SharedDistractorStats::new(mu_h, sigma_h, mu_r, sigma_r, 2).unwrap();
        let want = phi_oracle((mu_h - mu_r) / (sigma_h * sigma_h + sigma_r * sigma_r).sqrt());
        worst = worst.max((predict_eq1(&s).unwrap() - want).abs());
    }
    outcome(worst < 1e-6, format!("max |err| {worst:.2e} over 50 instances (tol 1e-6)"))
}

fn independent_vs_sampling() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(202);
    let draws = 1_000_000;
    let mut worst_z: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..30 {
        let d = rng.random_range(2..=8usize);
        let mu: Vec<f64> = (0..d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let sigma: Vec<f64> = (0..d).map(|_| rng.random_range(0.3..2.0)).collect();
        let class = rng.random_range(0..d);
        let stats = MomentStats::independent(vec![DVector::from_vec(mu.clone()); d], vec![DVector::from_vec(sigma.clone()); d])
            .unwrap();
        let pred = predict_eq2(&stats, class).unwrap();
        let freq = independent_oracle(&mu, &sigma, class, draws, &mut rng);
        let se = (freq * (1.0 - freq) / draws as f64).sqrt().max(1e-9);
        let z = (pred - freq).abs() / se;
        worst_z = worst_z.max(z);
        if z > 3.0 {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("{failures}/30 outside 3 SE, worst {worst_z:.2} SE ({draws} draws each)"),
    )
}

fn diagonal_reduction() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(303);
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let d = rng.random_range(2..=6usize);
        let mu = DVector::from_fn(d, |_, _| rng.random_range(-1.5..1.5));
        let var = DVector::from_fn(d, |_, _| rng.random_range(0.1..4.0));
        let class = rng.random_range(0..d);
        let cov = DMatrix::from_diagonal(&var);
        let stats = MomentStats::gaussian(vec![mu; d], vec![cov; d]).unwrap();
        let (mc, se) = predict_eq3_mc(&stats, class, 1_000_000, 7 + k).unwrap();
        let eq2 = predict_eq2(&stats, class).unwrap();
        let gap = (mc - eq2).abs();
        worst = worst.max(gap);
        if gap > (3.0 * se).max(0.005) {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("{failures}/20 out of tolerance, worst gap {worst:.5}"))
}

fn bivariate_correlated() -> Outcome {
    let (m0, m1, s0, s1) = (0.8, 0.0, 1.0, 1.5);
    let mut worst_z: f64 = 0.0;
    for (k, rho) in [-0.9, -0.5, 0.0, 0.5, 0.9].into_iter().enumerate() {
        let mu = DVector::from_vec(vec![m0, m1]);
        let cov = DMatrix::from_row_slice(2, 2, &[s0 * s0, rho * s0 * s1, rho * s0 * s1, s1 * s1]);
        let stats = MomentStats::gaussian(vec![mu.clone(), mu], vec![cov.clone(), cov]).unwrap();
        let (mc, se) = predict_eq3_mc(&stats, 0, 1_000_000, 40 + k as u64).unwrap();
        let want = phi_oracle((m0 - m1) / (s0 * s0 + s1 * s1 - 2.0 * rho * s0 * s1).sqrt());
        worst_z = worst_z.max((mc - want).abs() / se);
    }
    outcome(worst_z <= 3.0, format!("worst deviation {worst_z:.2} SE over 5 correlations"))
}

fn esn_codebook_curve() -> Outcome {
    let mut delays: Vec<usize> = (0..=10).collect();
    delays.extend(26..=30);
    let cfg = EsnConfig {
        readout: ReadoutKind::Codebook,
        delays,
        test_len: 10_000,
        mc_samples: 1_000,
        ..EsnConfig::default()
    };
    let rows = esn::average_curves(&esn::run_seeds(&cfg, 50).unwrap());
    let early: Vec<_> = rows.iter().filter(|r| r.delay <= 10).collect();
    let mad = early.iter().map(|r| (r.empirical - r.eq1).abs()).sum::<f64>() / early.len() as f64;
    let acc0 = rows[0].empirical;
    let late: Vec<f64> = rows.iter().filter(|r| r.delay > 25).map(|r| r.empirical).collect();
    let chance_err = late.iter().map(|a| (a - 0.5).abs()).fold(0.0, f64::max);
    let pass = mad <= 0.02 && acc0 >= 0.99 && chance_err <= 0.02;
    outcome(
        pass,
        format!(
            "MAD {mad:.4} (tol 0.02), delay-0 accuracy {acc0:.4} (min 0.99), \
             delays 26-30 accuracy {:.3}..{:.3} (want 0.5 +/- 0.02)",
            late.iter().cloned().fold(f64::INFINITY, f64::min),
            late.iter().cloned().fold(0.0, f64::max)
        ),
    )
}

fn esn_regression_bias() -> Outcome {
    let cfg = EsnConfig {
        readout: ReadoutKind::Regression,
        ..EsnConfig::default()
    };
    let rows = esn::average_curves(&esn::run_seeds(&cfg, 50).unwrap());
    let below: Vec<String> = rows
        .iter()
        .filter(|r| r.eq1 < r.empirical)
        .map(|r| format!("delay {} by {:.1e} (empirical {})", r.delay, r.empirical - r.eq1, r.empirical))
        .collect();
    let gap = rows.iter().map(|r| r.eq1 - r.empirical).sum::<f64>() / rows.len() as f64;
    let mad = rows.iter().map(|r| (r.empirical - r.eq3_mc).abs()).sum::<f64>() / rows.len() as f64;
    outcome(
        below.is_empty() && gap > 0.0 && mad <= 0.03,
        format!(
            "prediction below empirical at {:?}, mean gap {gap:.2e}, MAD vs MC {mad:.4} (tol 0.03)",
            below
        ),
    )
}

fn distractor_anchor() -> Outcome {
    let want = esn::distractor_sigma_theory(100, 4.0);
    let mut notes = Vec::new();
    let mut pass = true;
    for d in [8usize, 16, 32] {
        let cfg = EsnConfig {
            alphabet: d,
            similarity: Similarity::Dot,
            delays: vec![0, 5, 10],
            mc_samples: 1,
            ..EsnConfig::default()
        };
        let runs = esn::run_seeds(&cfg, 20).unwrap();
        let k = runs.len() as f64;
        for (i, &delay) in cfg.delays.iter().enumerate() {
            let mus: Vec<f64> = runs.iter().map(|r| r[i].shared.mu_r).collect();
            let m = mus.iter().sum::<f64>() / k;
            let se = (mus.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1.0)).sqrt() / k.sqrt();
            let s = runs.iter().map(|r| r[i].shared.sigma_r).sum::<f64>() / k;
            let ok = m.abs() < 3.0 * se && (s / want - 1.0).abs() <= 0.05;
            pass &= ok;
            if !ok || delay == 10 {
                notes.push(format!("D={d} delay {delay}: mu_r {m:.3} (3 SE {:.3}) sigma_r {s:.3}", 3.0 * se));
            }
        }
    }
    outcome(pass, format!("target sigma_r {want:.3}; {}", notes.join("; ")))
}

fn sign_law() -> Outcome {
    let rows = sweep_surface(&SweepGrid::default(), 1_000_000, 11).unwrap();
    let mut sign_fail = 0;
    for r in &rows {
        if (r.rho < 0.0 && r.empirical > r.eq2 + 3.0 * r.stderr) || (r.rho > 0.0 && r.empirical < r.eq2 - 3.0 * r.stderr) {
            sign_fail += 1;
        }
    }
    let mut mono_fail = 0;
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.mu == b.mu && a.sigma == b.sigma && b.empirical < a.empirical - 3.0 * a.stderr.hypot(b.stderr) {
            mono_fail += 1;
        }
    }
    outcome(
        sign_fail == 0 && mono_fail == 0,
        format!("{} cells; {sign_fail} sign violations, {mono_fail} monotonicity violations", rows.len()),
    )
}

fn shallow_correlation() -> Outcome {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let sets: Vec<Dataset> = ["iris", "wine", "breast_cancer", "digits"]
        .iter()
        .map(|n| Dataset::load(data.join(format!("{n}.csv"))).unwrap())
        .collect();
    let configs = [(50, 1.0), (200, 3.0), (500, 7.0)];
    let mut r = Vec::new();
    for kind in [ShallowReadout::Centroid, ShallowReadout::Ridge { lambda: 1.0 }] {
        let (mut acc, mut train, mut test) = (Vec::new(), Vec::new(), Vec::new());
        for ds in &sets {
            for &(n, kappa) in &configs {
                let cv = cross_validate(ds, &EncoderConfig { n, kappa, seed: 1 }, kind, 5, 2).unwrap();
                acc.push(cv.accuracy);
                train.push(cv.pred_eq2_train);
                test.push(cv.pred_eq2_test);
            }
        }
        r.push((pearson(&acc, &test).unwrap(), pearson(&acc, &train).unwrap()));
    }
    let (centroid, ridge) = (r[0], r[1]);
    outcome(
        centroid.0 >= 0.8 && ridge.0 >= 0.8 && ridge.1 < ridge.0,
        format!(
            "12 pairs; centroid r {:.3}, ridge r {:.3} (test stats) vs {:.3} (train stats)",
            centroid.0, ridge.0, ridge.1
        ),
    )
}

fn metrics_oracles() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(1010);
    let mut tau_mismatch = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let xs: Vec<f64> = (0..20).map(|_| rng.random_range(0..8) as f64).collect();
        let ys: Vec<f64> = (0..20).map(|_| rng.random_range(0..8) as f64).collect();
        let (mut s, mut tx, mut ty) = (0i64, 0i64, 0i64);
        for i in 0..20 {
            for j in i + 1..20 {
                let (dx, dy) = (xs[i] - xs[j], ys[i] - ys[j]);
                if dx == 0.0 {
                    tx += 1;
                }
                if dy == 0.0 {
                    ty += 1;
                }
                if dx * dy > 0.0 {
                    s += 1;
                } else if dx * dy < 0.0 {
                    s -= 1;
                }
            }
        }
        let n0 = 190i64;
        let want = s as f64 / ((n0 - tx) as f64 * (n0 - ty) as f64).sqrt();
        if kendall_tau(&xs, &ys).unwrap() != want {
            tau_mismatch += 1;
        }
        let n = 20.0;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        worst = worst.max((pearson(&xs, &ys).unwrap() - sxy / (sxx * syy).sqrt()).abs());
    }
    outcome(
        tau_mismatch == 0 && worst <= 1e-12,
        format!("{tau_mismatch}/100 tau mismatches, max pearson err {worst:.1e}"),
    )
}

fn readout_only_limits() -> Outcome {
    let (d, n) = (10, 64);
    let mut rng = ChaCha20Rng::seed_from_u64(1111);
    let w = DMatrix::from_fn(d, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let ro = ReadoutPerceptron::new(w, None, Similarity::Cosine).unwrap();
    let hi = analysis::readout_only_predict(&ro, 200.0, 50, 5).unwrap();
    let lo = analysis::readout_only_predict(&ro, -200.0, 50, 5).unwrap();
    let again = analysis::readout_only_predict(&ro, -200.0, 50, 5).unwrap();
    let hi_min = hi.per_class.iter().cloned().fold(1.0, f64::min);
    let lo_err = (lo.aggregate - 1.0 / d as f64).abs();
    let same = lo == again;
    outcome(
        hi_min >= 0.999 && lo_err <= 0.02 && same,
        format!("min per-class at +200 dB {hi_min:.5}, |aggregate - 1/D| at -200 dB {lo_err:.4}, deterministic {same}"),
    )
}

fn run_cli(args: &[String]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_perceptor"))
        .args(args)
        .env_remove("PERCEPTOR_THREADS")
        .output()
        .expect("cli runs");
    assert!(out.status.success(), "{:?}: {}", args, String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn cli_reproducible() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).display().to_string();
    let mut rng = ChaCha20Rng::seed_from_u64(1212);
    let (d, n) = (4, 6);
    let mut w = format!("{d},{n}\n");
    for _ in 0..d {
        let row: Vec<String> = (0..n).map(|_| format!("{:.4}", rng.random_range(-1.0..1.0))).collect();
        w.push_str(&row.join(","));
        w.push('\n');
    }
    std::fs::write(p("w.csv"), w).unwrap();
    let mut acts = String::new();
    for i in 0..d {
        for _ in 0..30 {
            let row: Vec<String> = (0..n).map(|_| format!("{:.4}", rng.random_range(-1.0..1.0))).collect();
            acts.push_str(&format!("{i},{}\n", row.join(",")));
        }
    }
    std::fs::write(p("a.csv"), acts).unwrap();
    std::fs::write(p("m.csv"), "predicted,actual\n0.9,0.8\n0.7,0.75\n0.5,0.4\n0.95,0.9\n").unwrap();
    let iris = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/iris.csv").display().to_string();
    let commands: Vec<Vec<String>> = [
        format!("predict --activations {} --weights {} --method eq3-mc --mc-samples 20000", p("a.csv"), p("w.csv")),
        "esn --n 50 --delays 0..4 --seeds 3 --train-len 600 --test-len 600 --mc-samples 2000 --readout regression".into(),
        format!("rvfl --data {iris} --n 20,40 --lambda 2^-2..0 --kappa 1,3 --folds 3"),
        format!("subproblem --activations {a} --activations {a} --weights {w} --weights {w} --subproblem-sizes 2,3 --per-size 3 --method kde", a = p("a.csv"), w = p("w.csv")),
        format!("readout-only --weights {w} --weights {w} --noise-db 0..6:2 --reps 10 --experiments 2", w = p("w.csv")),
        format!("metrics --input {}", p("m.csv")),
        "synth --mu 0.5,1 --sigma 1 --rho -0.5,0.5 --samples 20000".into(),
    ]
    .iter()
    .map(|c| {
        let mut v: Vec<String> = vec!["--seed".into(), "9".into()];
        v.extend(c.split_whitespace().map(String::from));
        v
    })
    .collect();
    let differing: Vec<&str> = commands
        .iter()
        .filter(|c| run_cli(c) != run_cli(c))
        .map(|c| c[2].as_str())
        .collect();
    outcome(
        differing.is_empty(),
        format!("{} subcommands rerun, differing: {:?}", commands.len(), differing),
    )
}

fn main() {
    let checks: [(&str, fn() -> Outcome, u64); 12] = [
        ("two-class closed form", closed_form_two_class, 1),
        ("independent model vs sampling", independent_vs_sampling, 30),
        ("diagonal covariance reduction", diagonal_reduction, 60),
        ("bivariate correlated oracle", bivariate_correlated, 10),
        ("ESN codebook curve", esn_codebook_curve, 300),
        ("ESN regression bias", esn_regression_bias, 300),
        ("distractor statistics anchor", distractor_anchor, 60),
        ("correlation sign law", sign_law, 120),
        ("shallow network correlation", shallow_correlation, 600),
        ("metrics oracles", metrics_oracles, 1),
        ("readout-only limits", readout_only_limits, 30),
        ("CLI reproducibility", cli_reproducible, 60),
    ];
    // Optional criterion numbers on the command line select a subset.
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (k, (name, run, budget)) in checks.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(k + 1)) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        let o = run();
        let took = t.elapsed();
        let in_time = took <= Duration::from_secs(*budget);
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:2} {} {name}: {} [{:.2}s of {budget}s]",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
