//! Ridge regression readouts: `W = Y^T X (X^T X + lambda I)^-1`.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// Factored normal matrix `X^T X + lambda I`, reusable across target sets.
pub struct RidgeSolver {
    chol: Cholesky<f64, Dyn>,
}

impl RidgeSolver {
    pub fn from_gram(mut gram: DMatrix<f64>, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidInput(format!("ridge lambda must be >= 0, got {lambda}")));
        }
        for k in 0..gram.nrows() {
            gram[(k, k)] += lambda;
        }
        let chol = gram.cholesky().ok_or(Error::SingularSystem)?;
        Ok(Self { chol })
    }

    pub fn new(x: &DMatrix<f64>, lambda: f64) -> Result<Self> {
        Self::from_gram(x.transpose() * x, lambda)
    }

    /// Solves for the `D x N` weight matrix given the cross term `X^T Y` (`N x D`).
    pub fn solve_cross(&self, xty: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(xty).transpose()
    }

    pub fn solve(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
        self.solve_cross(&(x.transpose() * y))
    }
}

/// Rows of `x` are inputs, rows of `y` targets; returns `D x N` weights.
pub fn ridge_fit(x: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.nrows(),
            context: "ridge targets vs inputs",
        });
    }
    let w = RidgeSolver::new(x, lambda)?.solve(x, y);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(w)
}

/// One-hot targets for labels in `[0, classes)`.
pub fn one_hot(labels: &[usize], classes: usize) -> DMatrix<f64> {
    DMatrix::from_fn(labels.len(), classes, |r, c| f64::from(u8::from(labels[r] == c)))
}

/// `||Y - X W^T||_F^2 + lambda ||W||_F^2`.
pub fn ridge_objective(x: &DMatrix<f64>, y: &DMatrix<f64>, w: &DMatrix<f64>, lambda: f64) -> f64 {
    (y - x * w.transpose()).norm_squared() + lambda * w.norm_squared()
}
