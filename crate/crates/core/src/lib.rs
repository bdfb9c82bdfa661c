//! Sparse inverse covariance (precision matrix) estimation by cyclic
//! coordinate descent on the l0-penalized Gaussian log-likelihood, with an
//! l1 baseline, synthetic ground-truth generators, evaluation metrics and a
//! seeded experiment harness.

pub mod cd;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod l0;
pub mod l1;
pub mod matrix;
pub mod model_gen;
pub mod seed;

pub use cd::{Penalty, SolveReport, SolverConfig, SolverState, SweepOrder};
pub use error::{Error, Result};
pub use matrix::SymMatrix;
