//! Coordinate descent for the l0-penalized Gaussian negative log-likelihood
//!
//! ```text
//! L(X) = −log det X + tr(S X) + λ ‖X‖₀,   ‖X‖₀ = #{(i, j) : x_ij ≠ 0}
//! ```
//!
//! over symmetric positive definite `X`. Each entry is minimized exactly with
//! all others held fixed. On the diagonal the one-dimensional problem is
//! smooth with a closed-form minimizer. Off the diagonal the candidate set is
//! `{0, m_ij}` where `m_ij` minimizes the smooth part, and the choice between
//! them is made from determinant ratios alone: the `−log det X` terms cancel,
//! so no full determinant is ever formed.
//!
//! All indices are 0-based.

use crate::cd::{self, Penalty, SolveReport, SolverConfig, SolverState};
use crate::error::{Error, Result};
use crate::matrix::{self, SymMatrix};

/// Diagonal start `X = diag(1/s_ii)` for the l0 problem.
pub fn init_state(s: &SymMatrix, lambda: f64) -> Result<SolverState> {
    SolverState::init(s, lambda, Penalty::L0)
}

/// `m_ii = x_ii + (y_ii − s_ii) / (y_ii s_ii)`.
pub fn minimizer_diag(state: &SolverState, i: usize) -> f64 {
    diag_minimizer(state.x.get(i, i), state.y.get(i, i), state.s.get(i, i))
}

#[inline]
pub(crate) fn diag_minimizer(x: f64, y: f64, s: f64) -> f64 {
    x + (y - s) / (y * s)
}

/// Minimizer of the smooth part of the off-diagonal coordinate problem,
/// `−log det Z(x) + 2 s_ij x`, with `Z(x)` the iterate with `x_ij = x_ji = x`.
///
/// With `Δ = y_ii y_jj − y_ij²` and `R = √(Δ² + 4 s² y_ii y_jj)` the root is
///
/// ```text
/// m = x_ij + y_ij/Δ + (Δ − R) / (2 Δ s)          (s ≠ 0)
/// m = x_ij + y_ij/Δ                               (s = 0)
/// ```
///
/// The last term is evaluated as `−2 s y_ii y_jj / (Δ (Δ + R))`, which is the
/// same quantity without the cancellation in `Δ − R` as `s → 0`.
pub fn minimizer_offdiag(state: &SolverState, i: usize, j: usize) -> Result<f64> {
    offdiag_minimizer(&state.y, state.x.get(i, j), state.s.get(i, j), i, j)
}

pub(crate) fn offdiag_minimizer(y: &SymMatrix, x: f64, s: f64, i: usize, j: usize) -> Result<f64> {
    let schur = matrix::schur_delta(y, i, j);
    if !(schur > 0.0) {
        return Err(Error::DriftDetected { i, j, schur });
    }
    let yij = y.get(i, j);
    let base = x + yij / schur;
    if s == 0.0 {
        return Ok(base);
    }
    let yy = y.get(i, i) * y.get(j, j);
    let root = (schur * schur + 4.0 * s * s * yy).sqrt();
    Ok(base - 2.0 * s * yy / (schur * (schur + root)))
}

/// `det Z(0) / det X = −Δ x_ij² − 2 y_ij x_ij + 1`; zero is an admissible
/// value for the entry iff this is positive.
pub fn zero_admissibility(state: &SolverState, i: usize, j: usize) -> f64 {
    matrix::det_ratio_offdiag(&state.y, i, j, -state.x.get(i, j))
}

/// `Φ = φ(0) − φ(m)` for the off-diagonal coordinate function
/// `φ(x) = −log det Z(x) + 2 s_ij x + 2λ·1(x ≠ 0)`:
///
/// ```text
/// Φ = −log q₀ + log q̄ − 2 s_ij m − 2λ
/// q₀ = −Δ x_ij² − 2 y_ij x_ij + 1,   q̄ = −Δ δ² + 2 y_ij δ + 1,   δ = m − x_ij
/// ```
///
/// Positive means `m` is strictly better than zero. Returns `+∞` when zero
/// is not admissible (`q₀ ≤ 0`) and `−∞` when `m` is not (`q̄ ≤ 0`).
pub fn threshold_gap(state: &SolverState, i: usize, j: usize, m: f64) -> f64 {
    let q0 = zero_admissibility(state, i, j);
    if !(q0 > 0.0) {
        return f64::INFINITY;
    }
    let delta = m - state.x.get(i, j);
    let qbar = matrix::det_ratio_offdiag(&state.y, i, j, delta);
    if !(qbar > 0.0) {
        return f64::NEG_INFINITY;
    }
    -q0.ln() + qbar.ln() - 2.0 * state.s.get(i, j) * m - 2.0 * state.lambda
}

/// The coordinate update map.
///
/// Diagonal entries and off-diagonal entries whose zero value is not
/// admissible go to the smooth minimizer. Otherwise the entry goes to zero
/// when `Φ < 0`, to `m` when `Φ > 0`, and on an exact tie keeps its current
/// zero/nonzero status.
pub fn apply_map(state: &SolverState, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Ok(minimizer_diag(state, i));
    }
    let m = minimizer_offdiag(state, i, j)?;
    if !(zero_admissibility(state, i, j) > 0.0) {
        return Ok(m);
    }
    let gap = threshold_gap(state, i, j, m);
    Ok(if gap < 0.0 {
        0.0
    } else if gap > 0.0 {
        m
    } else if state.x.get(i, j) != 0.0 {
        m
    } else {
        0.0
    })
}

/// One full row-major (or configured-order) pass. Entries that are zero and
/// stay zero cost no inverse work. Returns the objective decrease.
pub fn sweep(state: &mut SolverState, config: &SolverConfig) -> Result<f64> {
    state.sweep_with(config, false)
}

/// Runs the l0 coordinate descent from the diagonal start.
pub fn solve(s: &SymMatrix, lambda: f64, config: &SolverConfig) -> Result<(SymMatrix, SolveReport)> {
    solve_with_observer(s, lambda, config, &mut |_| {})
}

/// As [`solve`], calling `observer` at each sweep boundary.
pub fn solve_with_observer(
    s: &SymMatrix,
    lambda: f64,
    config: &SolverConfig,
    observer: &mut dyn FnMut(&SolverState),
) -> Result<(SymMatrix, SolveReport)> {
    cd::solve_state(init_state(s, lambda)?, config, observer)
}

/// `−log det X + tr(S X) + λ ‖X‖₀`, counting every exactly-nonzero entry
/// including the diagonal.
pub fn objective(x: &SymMatrix, s: &SymMatrix, lambda: f64) -> Result<f64> {
    let ld = matrix::logdet(x)?;
    Ok(-ld + s.trace_product(x) + lambda * x.count_nonzeros() as f64)
}

/// Fixed-point diagnostics of an l0 estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointResiduals {
    /// Max `|y_ij − s_ij|` over the diagonal and the nonzero off-diagonals;
    /// zero at an exact fixed point.
    pub max_nonzero_residual: f64,
    /// Zero entries with `s_ij = 0` violating `|y_ij| ≤ √(2λ y_ii y_jj)`.
    pub zero_bound_violations: usize,
    /// Largest `Φ` over zero off-diagonal entries; a fixed point has all of
    /// these `≤ 0` (nothing would enter).
    pub max_zero_gap: f64,
}

pub fn fixed_point_residuals(x: &SymMatrix, s: &SymMatrix, lambda: f64) -> Result<FixedPointResiduals> {
    let state = SolverState::from_iterate(x.clone(), s, lambda, Penalty::L0)?;
    let y = &state.y;
    let p = x.dim();
    let mut max_res: f64 = 0.0;
    let mut violations = 0;
    let mut max_zero_gap = f64::NEG_INFINITY;
    for i in 0..p {
        max_res = max_res.max((y.get(i, i) - s.get(i, i)).abs());
        for j in (i + 1)..p {
            if x.get(i, j) != 0.0 {
                max_res = max_res.max((y.get(i, j) - s.get(i, j)).abs());
                continue;
            }
            if s.get(i, j) == 0.0 {
                let bound = (2.0 * lambda * y.get(i, i) * y.get(j, j)).sqrt();
                if y.get(i, j).abs() > bound {
                    violations += 1;
                }
            }
            let m = minimizer_offdiag(&state, i, j)?;
            max_zero_gap = max_zero_gap.max(threshold_gap(&state, i, j, m));
        }
    }
    Ok(FixedPointResiduals {
        max_nonzero_residual: max_res,
        zero_bound_violations: violations,
        max_zero_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cov_075() -> SymMatrix {
        SymMatrix::from_rows(&[vec![1.0, 0.75], vec![0.75, 1.0]], 0.0).unwrap()
    }

    /// State with `X = I₂` against `S = [[1, .75], [.75, 1]]`.
    fn identity_state(lambda: f64) -> SolverState {
        SolverState::from_iterate(SymMatrix::identity(2), &cov_075(), lambda, Penalty::L0).unwrap()
    }

    /// φ(x) for the (0,1) entry of a 2×2 iterate, from the explicit determinant.
    fn phi_2x2(x_diag: [f64; 2], s01: f64, lambda: f64, x: f64) -> f64 {
        let det = x_diag[0] * x_diag[1] - x * x;
        let pen = if x != 0.0 { 2.0 * lambda } else { 0.0 };
        -det.ln() + 2.0 * s01 * x + pen
    }

    #[test]
    fn init_state_diagonal_start() {
        let st = init_state(&SymMatrix::identity(2), 0.1).unwrap();
        assert_eq!(st.x(), &SymMatrix::identity(2));
        assert_eq!(st.logdet_x(), 0.0);

        let st = init_state(&SymMatrix::from_diag(&[2.0, 4.0]), 0.1).unwrap();
        assert_eq!(st.x(), &SymMatrix::from_diag(&[0.5, 0.25]));
        assert_eq!(st.y(), &SymMatrix::from_diag(&[2.0, 4.0]));
        assert!((st.logdet_x() + 2f64.ln() + 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn init_state_rejects_bad_input() {
        let s = SymMatrix::from_diag(&[0.0, 1.0]);
        assert!(matches!(init_state(&s, 0.1), Err(Error::BadCovariance(_))));
        assert!(matches!(init_state(&SymMatrix::identity(2), 0.0), Err(Error::BadParams(_))));
    }

    #[test]
    fn minimizer_diag_cases() {
        // y_ii = s_ii is stationary.
        let st = init_state(&SymMatrix::from_diag(&[3.0, 1.0]), 0.1).unwrap();
        assert_eq!(minimizer_diag(&st, 0), st.x().get(0, 0));

        // X = I, s_11 = 2: argmin −log x + 2x = 1/2.
        let s = SymMatrix::from_diag(&[2.0, 1.0]);
        let st = SolverState::from_iterate(SymMatrix::identity(2), &s, 0.1, Penalty::L0).unwrap();
        let m = minimizer_diag(&st, 0);
        assert!((m - 0.5).abs() < 1e-15);
        let grid_best = (1..20000)
            .map(|k| k as f64 * 1e-4)
            .min_by(|a, b| {
                let f = |x: f64| -x.ln() + 2.0 * x;
                f(*a).partial_cmp(&f(*b)).unwrap()
            })
            .unwrap();
        assert!((grid_best - m).abs() <= 1e-4);

        // p = 1 fixed point.
        let st = init_state(&SymMatrix::from_diag(&[4.0]), 0.1).unwrap();
        assert_eq!(minimizer_diag(&st, 0), 0.25);
    }

    #[test]
    fn minimizer_offdiag_zero_covariance() {
        let x = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]], 0.0).unwrap();
        let s = SymMatrix::identity(2);
        let st = SolverState::from_iterate(x, &s, 0.1, Penalty::L0).unwrap();
        let m = minimizer_offdiag(&st, 0, 1).unwrap();
        assert!(m.abs() < 1e-15, "m = {m}");
        // det([[2,x],[x,2]]) = 4 − x² is maximized at 0.
        let best = (-10000..=10000)
            .map(|k| k as f64 * 1e-4)
            .max_by(|a, b| (4.0 - a * a).partial_cmp(&(4.0 - b * b)).unwrap())
            .unwrap();
        assert!((best - m).abs() <= 1e-4);
    }

    #[test]
    fn minimizer_offdiag_nonzero_covariance() {
        let st = identity_state(0.1);
        let m = minimizer_offdiag(&st, 0, 1).unwrap();
        let expect = (1.0 - (1.0f64 + 4.0 * 0.75 * 0.75).sqrt()) / 1.5;
        assert!((m - expect).abs() < 1e-15);
        assert!((m + 0.53518).abs() < 1e-5);
        // Stationarity 2x/(1−x²) + 1.5 = 0 on (−1, 1), bisection oracle.
        let g = |x: f64| 2.0 * x / (1.0 - x * x) + 1.5;
        let (mut lo, mut hi) = (-0.999_999, 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((m - lo).abs() < 1e-12);
        // Determinant stays positive at the candidate.
        assert!(1.0 - m * m > 0.0);
    }

    #[test]
    fn minimizer_offdiag_continuous_in_covariance() {
        let x = SymMatrix::from_rows(&[vec![1.5, 0.2], vec![0.2, 1.1]], 0.0).unwrap();
        let m_at = |s01: f64| {
            let s = SymMatrix::from_rows(&[vec![1.0, s01], vec![s01, 1.0]], 0.0).unwrap();
            let st = SolverState::from_iterate(x.clone(), &s, 0.1, Penalty::L0).unwrap();
            minimizer_offdiag(&st, 0, 1).unwrap()
        };
        assert!((m_at(1e-10) - m_at(0.0)).abs() <= 1e-6);
    }

    #[test]
    fn minimizer_offdiag_flags_drift() {
        // A "Y" that is singular in the (0,1) block.
        let ones = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]], 0.0).unwrap();
        assert!(matches!(
            offdiag_minimizer(&ones, 0.0, 0.5, 0, 1),
            Err(Error::DriftDetected { .. })
        ));
    }

    #[test]
    fn threshold_gap_matches_explicit_determinants() {
        for (lambda, expect) in [(0.1, 0.2653), (0.3, -0.1347)] {
            let st = identity_state(lambda);
            let m = minimizer_offdiag(&st, 0, 1).unwrap();
            let gap = threshold_gap(&st, 0, 1, m);
            let oracle = phi_2x2([1.0, 1.0], 0.75, lambda, 0.0) - phi_2x2([1.0, 1.0], 0.75, lambda, m);
            assert!((gap - oracle).abs() < 1e-12, "gap {gap} vs oracle {oracle}");
            assert!((gap - expect).abs() < 5e-5, "gap {gap} vs {expect}");
        }
    }

    #[test]
    fn threshold_gap_crossover() {
        let st = identity_state(0.1);
        let m = minimizer_offdiag(&st, 0, 1).unwrap();
        let crossover = 0.1 + 0.5 * threshold_gap(&st, 0, 1, m);
        assert!((crossover - 0.2327).abs() < 1e-4, "crossover {crossover}");
        assert!(threshold_gap(&identity_state(crossover - 1e-6), 0, 1, m) > 0.0);
        assert!(threshold_gap(&identity_state(crossover + 1e-6), 0, 1, m) < 0.0);
    }

    #[test]
    fn threshold_gap_tie_at_current_value() {
        // X = [[1, x], [x, 1]] with m = x: Φ = log(1 − x²) − 2 s x − 2λ,
        // so λ = (log(1 − x²) − 2 s x) / 2 makes φ(0) = φ(x).
        let xv: f64 = -0.5;
        let lambda = 0.5 * ((1.0 - xv * xv).ln() - 2.0 * 0.75 * xv);
        let x = SymMatrix::from_rows(&[vec![1.0, xv], vec![xv, 1.0]], 0.0).unwrap();
        let st = SolverState::from_iterate(x, &cov_075(), lambda, Penalty::L0).unwrap();
        assert!(threshold_gap(&st, 0, 1, xv).abs() < 1e-15);
    }

    #[test]
    fn apply_map_branches() {
        let st = identity_state(0.3);
        assert_eq!(apply_map(&st, 0, 1).unwrap(), 0.0);
        let st = identity_state(0.1);
        assert!((apply_map(&st, 0, 1).unwrap() + 0.53518).abs() < 1e-5);
        for lambda in [1e-3, 0.3, 10.0] {
            let st = identity_state(lambda);
            assert_eq!(apply_map(&st, 0, 0).unwrap(), minimizer_diag(&st, 0));
        }
    }

    #[test]
    fn apply_map_inadmissible_zero_keeps_smooth_minimizer() {
        // Removing x_12 from this equicorrelated matrix breaks positive
        // definiteness, so the map must return m regardless of λ.
        let x = SymMatrix::from_upper_fn(3, |i, j| if i == j { 1.0 } else { 0.75 });
        let s = SymMatrix::identity(3);
        let st = SolverState::from_iterate(x, &s, 100.0, Penalty::L0).unwrap();
        assert!(zero_admissibility(&st, 1, 2) <= 0.0);
        let m = minimizer_offdiag(&st, 1, 2).unwrap();
        assert_eq!(apply_map(&st, 1, 2).unwrap(), m);
        assert_ne!(m, 0.0);
    }

    #[test]
    fn one_sweep_keeps_zero_at_high_penalty() {
        let mut st = init_state(&cov_075(), 0.3).unwrap();
        let dec = sweep(&mut st, &SolverConfig::default()).unwrap();
        assert_eq!(st.x(), &SymMatrix::identity(2));
        assert_eq!(dec, 0.0);
    }

    #[test]
    fn sweep_at_fixed_point_is_identity() {
        let s = SymMatrix::from_diag(&[2.0, 3.0, 0.5]);
        let mut st = init_state(&s, 0.2).unwrap();
        let before = st.x().clone();
        assert_eq!(sweep(&mut st, &SolverConfig::default()).unwrap(), 0.0);
        assert_eq!(st.x(), &before);
    }

    #[test]
    fn solve_diagonal_covariance() {
        let s = SymMatrix::from_diag(&[2.0, 4.0, 0.5, 1.0]);
        let (x, rep) = solve(&s, 0.1, &SolverConfig::default()).unwrap();
        assert_eq!(x, SymMatrix::from_diag(&[0.5, 0.25, 2.0, 1.0]));
        assert!(rep.converged);
        assert_eq!(rep.sweeps_used, 1);
        assert_eq!(rep.nnz_offdiag, 0);
    }

    #[test]
    fn solve_small_penalty_reaches_stationarity() {
        // The default relative-change rule stops with O(1e-4) gradient slack
        // on this strongly correlated pair; run it out to the fixed point.
        let cfg = SolverConfig {
            rel_tol: 1e-15,
            max_sweeps: 5000,
            ..SolverConfig::default()
        };
        let (x, rep) = solve(&cov_075(), 0.01, &cfg).unwrap();
        assert!(rep.converged);
        assert_ne!(x.get(0, 1), 0.0);
        let y = matrix::inverse_pd(&x).unwrap();
        assert!((y.get(0, 1) - 0.75).abs() <= 1e-6, "y01 = {}", y.get(0, 1));
    }

    #[test]
    fn solve_large_penalty_is_diagonal() {
        let (x, rep) = solve(&cov_075(), 1.0, &SolverConfig::default()).unwrap();
        assert!(x.is_diagonal());
        assert!(rep.converged);
    }

    #[test]
    fn objective_values() {
        let i3 = SymMatrix::identity(3);
        assert!((objective(&i3, &i3, 0.2).unwrap() - (3.0 + 0.6)).abs() < 1e-15);

        let sd = [2.0, 0.5, 3.0];
        let s = SymMatrix::from_diag(&sd);
        let x = SymMatrix::from_diag(&sd.map(|v| 1.0 / v));
        let expect: f64 = sd.iter().map(|v| v.ln()).sum::<f64>() + 3.0 + 0.7 * 3.0;
        assert!((objective(&x, &s, 0.7).unwrap() - expect).abs() < 1e-14);

        let x = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]], 0.0).unwrap();
        let v = objective(&x, &SymMatrix::identity(2), 0.5).unwrap();
        assert!((v - (-(3f64.ln()) + 4.0 + 2.0)).abs() < 1e-14);
        assert!((v - 4.9014).abs() < 1e-4);

        let bad = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]], 0.0).unwrap();
        assert!(matches!(objective(&bad, &i3_2(), 0.1), Err(Error::NotPd { .. })));
    }

    fn i3_2() -> SymMatrix {
        SymMatrix::identity(2)
    }

    #[test]
    fn residuals_of_diagonal_solution() {
        let sd = [2.0, 0.5, 3.0];
        let s = SymMatrix::from_diag(&sd);
        let x = SymMatrix::from_diag(&sd.map(|v| 1.0 / v));
        let r = fixed_point_residuals(&x, &s, 0.1).unwrap();
        assert!(r.max_nonzero_residual < 1e-15);
        assert_eq!(r.zero_bound_violations, 0);
        assert!(r.max_zero_gap < 0.0);
    }

    #[test]
    fn residuals_count_zero_bound_violations() {
        // x_01 = 0 with s_01 = 0 but y_01 large relative to √(2λ y00 y11).
        let x = SymMatrix::from_rows(
            &[vec![1.0, 0.0, 0.6], vec![0.0, 1.0, 0.6], vec![0.6, 0.6, 1.0]],
            0.0,
        )
        .unwrap();
        let s = SymMatrix::from_rows(
            &[vec![1.0, 0.0, 0.3], vec![0.0, 1.0, 0.3], vec![0.3, 0.3, 1.0]],
            0.0,
        )
        .unwrap();
        let r = fixed_point_residuals(&x, &s, 1e-4).unwrap();
        assert_eq!(r.zero_bound_violations, 1);
    }
}
