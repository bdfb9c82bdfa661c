//! l1-penalized baseline on the same coordinate-descent substrate:
//!
//! ```text
//! L₁(X) = −log det X + tr(S X) + μ Σ_ij |x_ij|
//! ```
//!
//! The element rule follows from the one-dimensional subgradient condition.
//! The diagonal is smooth (entries stay positive), so its minimizer is the l0
//! diagonal formula with `s_ii` shifted to `s_ii + μ`. An off-diagonal entry
//! is set to zero iff zero is admissible and `|[Z(0)⁻¹]_ij − s_ij| ≤ μ`;
//! otherwise the smooth root is taken with `s_ij` shifted by `μ·sgn`, the
//! sign being the side of zero the minimizer lies on.

use crate::cd::{self, Penalty, SolveReport, SolverConfig, SolverState};
use crate::error::{Error, Result};
use crate::l0;
use crate::matrix::{self, SymMatrix};

/// Same knobs as the l0 solver.
pub type L1Config = SolverConfig;

pub(crate) fn element_target(state: &SolverState, i: usize, j: usize) -> Result<f64> {
    let mu = state.lambda;
    let (x, y, s) = (&state.x, &state.y, &state.s);
    if i == j {
        return Ok(l0::diag_minimizer(x.get(i, i), y.get(i, i), s.get(i, i) + mu));
    }
    let schur = matrix::schur_delta(y, i, j);
    if !(schur > 0.0) {
        return Err(Error::DriftDetected { i, j, schur });
    }
    let xij = x.get(i, j);
    let yij = y.get(i, j);
    let sij = s.get(i, j);
    let q0 = matrix::det_ratio_offdiag(y, i, j, -xij);
    let sign = if q0 > 0.0 {
        // [Z(0)⁻¹]_ij from the rank-two inverse identity at δ = −x_ij.
        let inv_at_zero = (schur * xij + yij) / q0;
        let g0 = inv_at_zero - sij;
        if g0.abs() <= mu {
            return Ok(0.0);
        }
        g0.signum()
    } else {
        // Zero is outside the positive definite interval, which then lies
        // entirely on the side of the current (necessarily nonzero) value.
        xij.signum()
    };
    l0::offdiag_minimizer(y, xij, sij + mu * sign, i, j)
}

/// l1 coordinate descent from the diagonal start `X = diag(1/s_ii)`.
pub fn solve_l1(s: &SymMatrix, mu: f64, config: &L1Config) -> Result<(SymMatrix, SolveReport)> {
    solve_l1_with_observer(s, mu, config, &mut |_| {})
}

pub fn solve_l1_with_observer(
    s: &SymMatrix,
    mu: f64,
    config: &L1Config,
    observer: &mut dyn FnMut(&SolverState),
) -> Result<(SymMatrix, SolveReport)> {
    cd::solve_state(SolverState::init(s, mu, Penalty::L1)?, config, observer)
}

/// `−log det X + tr(S X) + μ Σ |x_ij|` over all entries.
pub fn objective(x: &SymMatrix, s: &SymMatrix, mu: f64) -> Result<f64> {
    let ld = matrix::logdet(x)?;
    let l1: f64 = x.as_slice().iter().map(|v| v.abs()).sum();
    Ok(-ld + s.trace_product(x) + mu * l1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// Max of `|y_ii − s_ii − μ|` and `|y_ij − s_ij − μ·sgn(x_ij)|` over nonzeros.
    pub max_nonzero_residual: f64,
    /// Max of `|y_ij − s_ij| − μ` over zero off-diagonals, floored at zero.
    pub max_zero_excess: f64,
}

/// Optimality-condition residuals of an l1 estimate.
pub fn kkt_residuals(x: &SymMatrix, s: &SymMatrix, mu: f64) -> Result<KktResiduals> {
    let y = matrix::inverse_pd(x)?;
    let p = x.dim();
    let mut nonzero: f64 = 0.0;
    let mut zero: f64 = 0.0;
    for i in 0..p {
        nonzero = nonzero.max((y.get(i, i) - s.get(i, i) - mu).abs());
        for j in (i + 1)..p {
            let xij = x.get(i, j);
            let g = y.get(i, j) - s.get(i, j);
            if xij != 0.0 {
                nonzero = nonzero.max((g - mu * xij.signum()).abs());
            } else {
                zero = zero.max(g.abs() - mu);
            }
        }
    }
    Ok(KktResiduals {
        max_nonzero_residual: nonzero,
        max_zero_excess: zero,
    })
}
