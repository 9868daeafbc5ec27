//! Adaptive composite Gauss–Legendre quadrature on finite intervals.

use std::sync::OnceLock;

const ORDER: usize = 15;
const MAX_DEPTH: u32 = 48;

/// Nodes and weights of the `ORDER`-point rule on [-1, 1].
fn rule() -> &'static ([f64; ORDER], [f64; ORDER]) {
    static RULE: OnceLock<([f64; ORDER], [f64; ORDER])> = OnceLock::new();
    RULE.get_or_init(|| legendre_rule(ORDER))
}

/// Newton iteration on P_n from Chebyshev-style initial guesses.
fn legendre_rule<const N: usize>(n: usize) -> ([f64; N], [f64; N]) {
    let mut nodes = [0.0; N];
    let mut weights = [0.0; N];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

#[inline]
fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes
        .iter()
        .zip(weights)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

fn refine<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = panel(f, a, m);
    let right = panel(f, m, b);
    let halves = left + right;
    if (halves - whole).abs() <= tol || depth >= MAX_DEPTH || m <= a || m >= b {
        return halves;
    }
    refine(f, a, m, left, 0.5 * tol, depth + 1) + refine(f, m, b, right, 0.5 * tol, depth + 1)
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// The interval is cut at every breakpoint that falls strictly inside it, then each
/// piece is split into `panels` equal panels that are refined independently until
/// the two-half estimate agrees with the single-panel estimate.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    panels: usize,
    tol: f64,
) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let mut cuts: Vec<f64> = std::iter::once(a)
        .chain(breakpoints.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();

    let panels = panels.max(1);
    let width = b - a;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let h = (hi - lo) / panels as f64;
        let ptol = tol * h / width;
        for k in 0..panels {
            let pa = lo + k as f64 * h;
            let pb = if k + 1 == panels { hi } else { pa + h };
            let whole = panel(&f, pa, pb);
            total += refine(&f, pa, pb, whole, ptol, 0);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        // 15 points integrate degree 29 exactly
        let v = integrate(|x| x.powi(28), -1.0, 1.0, &[], 1, 1e-14);
        assert!((v - 2.0 / 29.0).abs() < 1e-14);
        let (_, w) = rule();
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn smooth_integrand() {
        let v = integrate(f64::sin, 0.0, std::f64::consts::PI, &[], 4, 1e-12);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn step_integrand_with_breakpoint() {
        let f = |x: f64| if x > 0.3 { 1.0 } else { 0.0 };
        let v = integrate(f, 0.0, 1.0, &[0.3], 2, 1e-12);
        assert!((v - 0.7).abs() < 1e-12);
    }

    #[test]
    fn sharp_peak_is_refined() {
        let s = 0.02;
        let f = |x: f64| crate::normal::pdf_with(x, 0.123, s);
        let v = integrate(f, -1.0, 1.0, &[], 8, 1e-10);
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(integrate(|_| 1.0, 1.0, 1.0, &[], 4, 1e-9), 0.0);
    }
}
