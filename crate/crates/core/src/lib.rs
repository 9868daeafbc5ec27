//! Predicts the accuracy of a classifier that ends in a dense readout layer from the
//! first two moments of the sums at its output neurons.

pub mod analysis;
pub mod error;
pub mod esn;
pub mod io;
pub mod kde;
pub mod normal;
pub mod quadrature;
pub mod ridge;
pub mod rng;
pub mod rvfl;
pub mod stats;
pub mod synth;
pub mod theory;

pub use error::{Error, Result};
pub use nalgebra;
pub use stats::{
    avg_correlation, avg_correlation_from_sums, compute_sums, estimate_moments, ActivationSet, MomentStats, Priors,
    ReadoutPerceptron, Similarity, SumSamples,
};
pub use theory::{Method, PredictionReport, SharedDistractorStats};
