use nalgebra::DMatrix;
use perceptor_core::stats::regularize_psd;
use perceptor_core::{compute_sums, estimate_moments, ActivationSet, Priors, ReadoutPerceptron, Similarity, SumSamples};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize, lo: f64, hi: f64) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(lo..hi, rows * cols).prop_map(move |v| DMatrix::from_row_slice(rows, cols, &v))
}

fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dot_sums_are_linear(x0 in matrix(4, 3, -5.0, 5.0), x1 in matrix(3, 3, -5.0, 5.0),
                           w in matrix(2, 3, -2.0, 2.0), alpha in -10.0..10.0f64) {
        let ro = ReadoutPerceptron::new(w, None, Similarity::Dot).unwrap();
        let acts = ActivationSet::new(vec![x0.clone(), x1.clone()]).unwrap();
        let scaled = ActivationSet::new(vec![x0 * alpha, x1 * alpha]).unwrap();
        let a = compute_sums(&acts, &ro).unwrap();
        let b = compute_sums(&scaled, &ro).unwrap();
        for i in 0..2 {
            prop_assert!(close(&(a.class(i) * alpha), b.class(i), 1e-12));
        }
    }

    #[test]
    fn cosine_sums_are_scale_invariant(x0 in matrix(4, 3, 0.1, 5.0), x1 in matrix(3, 3, -5.0, -0.1),
                                       w in matrix(2, 3, 0.1, 2.0), alpha in 0.01..100.0f64) {
        let ro = ReadoutPerceptron::new(w, None, Similarity::Cosine).unwrap();
        let acts = ActivationSet::new(vec![x0.clone(), x1.clone()]).unwrap();
        let scaled = ActivationSet::new(vec![x0 * alpha, x1 * alpha]).unwrap();
        let a = compute_sums(&acts, &ro).unwrap();
        let b = compute_sums(&scaled, &ro).unwrap();
        for i in 0..2 {
            prop_assert!(close(a.class(i), b.class(i), 1e-12));
        }
    }

    #[test]
    fn moments_ignore_sample_order(m in matrix(8, 3, -4.0, 4.0), other in matrix(5, 3, -4.0, 4.0),
                                   order in Just((0..8).collect::<Vec<usize>>()).prop_shuffle()) {
        let shuffled = DMatrix::from_fn(8, 3, |r, c| m[(order[r], c)]);
        let a = estimate_moments(&SumSamples::new(vec![m, other.clone(), other.clone()]).unwrap(), &Priors::Empirical).unwrap();
        let b = estimate_moments(&SumSamples::new(vec![shuffled, other.clone(), other]).unwrap(), &Priors::Empirical).unwrap();
        prop_assert!((a.mu(0) - b.mu(0)).amax() < 1e-12);
        prop_assert!((a.sigma(0) - b.sigma(0)).amax() < 1e-12);
        prop_assert!(close(a.cov(0).unwrap(), b.cov(0).unwrap(), 1e-12));
    }

    #[test]
    fn covariance_diagonal_is_sigma_squared(m in matrix(12, 3, -4.0, 4.0)) {
        let s = estimate_moments(&SumSamples::new(vec![m.clone(), m.clone(), m]).unwrap(), &Priors::Uniform).unwrap();
        let cov = s.cov(1).unwrap();
        for k in 0..3 {
            let v = s.sigma(1)[k].powi(2);
            prop_assert!((cov[(k, k)] - v).abs() <= 1e-9 * v.max(1e-300));
        }
    }

    #[test]
    fn regularized_covariance_is_psd(b in matrix(5, 2, -3.0, 3.0), noise in matrix(5, 5, -1e-9, 1e-9)) {
        // Rank-2 Gram matrix in 5 dimensions plus a tiny symmetric perturbation.
        let cov = &b * b.transpose() + (&noise + noise.transpose()) * 0.5;
        let fixed = regularize_psd(cov);
        let min = fixed.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-9, "min eigenvalue {min}");
    }
}
