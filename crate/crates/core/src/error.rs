use thiserror::Error;

/// Errors raised by the matrix routines, solvers, generators and harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Cholesky hit a non-positive pivot (0-based index).
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPd { pivot: usize, value: f64 },

    /// A rank-one/rank-two inverse update would cross (or nearly cross) singularity.
    #[error("inverse update denominator {denominator:e} is below the floor {floor:e}")]
    SingularUpdate { denominator: f64, floor: f64 },

    /// The running inverse no longer looks positive definite.
    #[error("numerical drift detected at entry ({i}, {j}): Schur quantity {schur:e}")]
    DriftDetected { i: usize, j: usize, schur: f64 },

    #[error("bad covariance: {0}")]
    BadCovariance(String),

    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
