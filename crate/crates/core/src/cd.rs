//! Cyclic coordinate-descent driver shared by the l0 and l1 estimators.
//!
//! The driver owns the iterate `X`, its inverse `Y` and a running
//! `log det X`. Each visited entry asks the penalty's element rule for a new
//! value; when the value changes, `Y` is patched with a rank-one or rank-two
//! inverse update and `log det X` with the log of the determinant ratio.
//! At every sweep boundary the iterate is re-factored by Cholesky, which
//! certifies positive definiteness and resynchronizes the log-determinant;
//! `Y` itself is rebuilt from that factor every `refresh_period` sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{self, SymMatrix};
use crate::{l0, l1};

/// Which sparsity penalty the driver minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    L0,
    L1,
}

impl Penalty {
    pub fn name(self) -> &'static str {
        match self {
            Penalty::L0 => "l0",
            Penalty::L1 => "l1",
        }
    }
}

impl std::fmt::Display for Penalty {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Penalty {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l0" => Ok(Penalty::L0),
            "l1" => Ok(Penalty::L1),
            other => Err(Error::BadParams(format!("unknown solver {other:?}"))),
        }
    }
}

/// Order in which the diagonal and upper-triangle entries are visited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOrder {
    /// `(0,0), (0,1), …, (0,p−1), (1,1), (1,2), …`
    #[default]
    RowMajor,
    /// The row-major sequence reversed.
    Reversed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Stop once `|L(X) − L(X⁺)| / |L(X)|` over a full sweep drops below this.
    pub rel_tol: f64,
    pub max_sweeps: usize,
    /// Rebuild `Y` from a Cholesky factor every this many sweeps.
    pub refresh_period: usize,
    /// After this many sweeps, visit only the diagonal and current nonzeros,
    /// except that every fifth sweep is still a full one. `None` disables it.
    pub active_set_only_after: Option<usize>,
    /// Inverse updates with a determinant ratio below this are rejected.
    pub denom_floor: f64,
    pub order: SweepOrder,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_sweeps: 500,
            refresh_period: 10,
            active_set_only_after: None,
            denom_floor: matrix::DENOM_FLOOR,
            order: SweepOrder::RowMajor,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::BadParams("rel_tol must be positive".into()));
        }
        if self.max_sweeps < 1 {
            return Err(Error::BadParams("max_sweeps must be at least 1".into()));
        }
        if self.refresh_period < 1 {
            return Err(Error::BadParams("refresh_period must be at least 1".into()));
        }
        if !(self.denom_floor > 0.0) {
            return Err(Error::BadParams("denom_floor must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of one solve. Field names are the stable JSON schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub sweeps_used: usize,
    pub converged: bool,
    pub final_objective: f64,
    pub nnz_offdiag: usize,
    /// l0: max `|y_ij − s_ij|` over the diagonal and nonzeros.
    /// l1: max KKT residual over the diagonal and nonzeros.
    pub fixed_point_max_residual: f64,
    /// Objective after each sweep.
    pub objective_trace: Vec<f64>,
}

/// Iterate, inverse and bookkeeping for one coordinate-descent run.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub(crate) x: SymMatrix,
    pub(crate) y: SymMatrix,
    pub(crate) logdet_x: f64,
    pub(crate) s: SymMatrix,
    pub(crate) lambda: f64,
    pub(crate) penalty: Penalty,
    pub(crate) sweep_count: usize,
    pub(crate) last_objective: f64,
}

pub(crate) fn check_covariance(s: &SymMatrix) -> Result<()> {
    for i in 0..s.dim() {
        let v = s.get(i, i);
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::BadCovariance(format!(
                "diagonal entry {i} is {v}, must be positive"
            )));
        }
    }
    if s.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::BadCovariance("non-finite entry".into()));
    }
    Ok(())
}

impl SolverState {
    /// Diagonal start `X = diag(1/s_ii)`, `Y = diag(s_ii)`.
    pub fn init(s: &SymMatrix, lambda: f64, penalty: Penalty) -> Result<Self> {
        check_covariance(s)?;
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::BadParams(format!("penalty weight {lambda} must be positive")));
        }
        let d = s.diagonal();
        let x = SymMatrix::from_diag(&d.iter().map(|v| 1.0 / v).collect::<Vec<_>>());
        let y = SymMatrix::from_diag(&d);
        let logdet_x = -d.iter().map(|v| v.ln()).sum::<f64>();
        let mut state = Self {
            x,
            y,
            logdet_x,
            s: s.clone(),
            lambda,
            penalty,
            sweep_count: 0,
            last_objective: 0.0,
        };
        state.last_objective = state.running_objective();
        Ok(state)
    }

    /// Starts from an arbitrary positive definite iterate.
    pub fn from_iterate(x: SymMatrix, s: &SymMatrix, lambda: f64, penalty: Penalty) -> Result<Self> {
        check_covariance(s)?;
        if x.dim() != s.dim() {
            return Err(Error::BadParams("iterate and covariance differ in size".into()));
        }
        let chol = matrix::cholesky(&x)?;
        let mut state = Self {
            y: chol.inverse(),
            logdet_x: chol.logdet,
            x,
            s: s.clone(),
            lambda,
            penalty,
            sweep_count: 0,
            last_objective: 0.0,
        };
        state.last_objective = state.running_objective();
        Ok(state)
    }

    pub fn x(&self) -> &SymMatrix {
        &self.x
    }
    pub fn y(&self) -> &SymMatrix {
        &self.y
    }
    pub fn s(&self) -> &SymMatrix {
        &self.s
    }
    pub fn logdet_x(&self) -> f64 {
        self.logdet_x
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn penalty(&self) -> Penalty {
        self.penalty
    }
    pub fn sweep_count(&self) -> usize {
        self.sweep_count
    }
    pub fn last_objective(&self) -> f64 {
        self.last_objective
    }
    pub fn into_x(self) -> SymMatrix {
        self.x
    }

    /// Penalized objective from the running log-determinant.
    pub fn running_objective(&self) -> f64 {
        let pen = match self.penalty {
            Penalty::L0 => self.x.count_nonzeros() as f64,
            Penalty::L1 => self.x.as_slice().iter().map(|v| v.abs()).sum(),
        };
        -self.logdet_x + self.s.trace_product(&self.x) + self.lambda * pen
    }

    /// Rebuilds `Y` and `log det X` from a fresh Cholesky factor of `X`.
    pub fn refresh(&mut self) -> Result<()> {
        let chol = matrix::cholesky(&self.x)?;
        self.y = chol.inverse();
        self.logdet_x = chol.logdet;
        Ok(())
    }

    fn element_target(&self, i: usize, j: usize) -> Result<f64> {
        match self.penalty {
            Penalty::L0 => l0::apply_map(self, i, j),
            Penalty::L1 => l1::element_target(self, i, j),
        }
    }

    /// Sets entry `(i, j)` to `value`, patching `Y` and `log det X`.
    fn write_entry(&mut self, i: usize, j: usize, value: f64, floor: f64) -> Result<()> {
        let delta = value - self.x.get(i, j);
        if delta == 0.0 {
            return Ok(());
        }
        let ratio = if i == j {
            matrix::smw_update_diag_in_place(&mut self.y, i, delta, floor)?
        } else {
            matrix::smw_update_offdiag_in_place(&mut self.y, i, j, delta, floor)?
        };
        if !(ratio > 0.0) {
            return Err(Error::DriftDetected {
                i,
                j,
                schur: ratio,
            });
        }
        self.logdet_x += ratio.ln();
        self.x.set(i, j, value);
        Ok(())
    }

    /// Visits one entry: computes the element minimizer and applies it.
    /// Returns whether the entry changed.
    pub fn update_entry(&mut self, i: usize, j: usize, floor: f64) -> Result<bool> {
        let old = self.x.get(i, j);
        let attempt = self
            .element_target(i, j)
            .and_then(|v| self.write_entry(i, j, v, floor).map(|_| v));
        let new = match attempt {
            Ok(v) => v,
            Err(Error::DriftDetected { .. }) | Err(Error::SingularUpdate { .. }) => {
                self.refresh()?;
                let v = self.element_target(i, j)?;
                self.write_entry(i, j, v, floor)?;
                v
            }
            Err(e) => return Err(e),
        };
        Ok(new != old)
    }

    fn entry_order(&self, order: SweepOrder, active_only: bool) -> Vec<(usize, usize)> {
        let p = self.x.dim();
        let mut entries = Vec::with_capacity(p * (p + 1) / 2);
        for i in 0..p {
            for j in i..p {
                if active_only && i != j && self.x.get(i, j) == 0.0 {
                    continue;
                }
                entries.push((i, j));
            }
        }
        if order == SweepOrder::Reversed {
            entries.reverse();
        }
        entries
    }

    /// One pass over the diagonal and upper triangle (or only the current
    /// support when `active_only`). Returns the decrease of the running
    /// objective, which is nonnegative up to rounding.
    pub fn sweep_with(&mut self, config: &SolverConfig, active_only: bool) -> Result<f64> {
        let before = self.running_objective();
        for (i, j) in self.entry_order(config.order, active_only) {
            self.update_entry(i, j, config.denom_floor)?;
        }
        self.sweep_count += 1;
        let after = self.running_objective();
        self.last_objective = after;
        Ok(before - after)
    }
}

fn is_full_sweep(config: &SolverConfig, sweep_index: usize) -> bool {
    match config.active_set_only_after {
        Some(k) if sweep_index > k => (sweep_index - k) % 5 == 0,
        _ => true,
    }
}

/// Runs sweeps until the relative objective change over a full sweep falls
/// below `rel_tol` or `max_sweeps` is reached. `observer` sees the state at
/// every sweep boundary, after the Cholesky certification.
pub(crate) fn run(
    mut state: SolverState,
    config: &SolverConfig,
    observer: &mut dyn FnMut(&SolverState),
) -> Result<(SolverState, usize, bool, Vec<f64>)> {
    config.validate()?;
    let mut prev = state.running_objective();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    for k in 1..=config.max_sweeps {
        let full = is_full_sweep(config, k);
        state.sweep_with(config, !full)?;
        sweeps = k;

        let chol = matrix::cholesky(&state.x)?;
        state.logdet_x = chol.logdet;
        if k % config.refresh_period == 0 {
            state.y = chol.inverse();
        }
        let obj = state.running_objective();
        state.last_objective = obj;
        trace.push(obj);
        observer(&state);

        let change = (prev - obj).abs();
        let rel = if prev != 0.0 { change / prev.abs() } else { change };
        prev = obj;
        if full && rel < config.rel_tol {
            converged = true;
            break;
        }
    }
    state.refresh()?;
    Ok((state, sweeps, converged, trace))
}

/// Runs the solve from `state` and builds the penalty-specific report.
pub fn solve_state(
    state: SolverState,
    config: &SolverConfig,
    observer: &mut dyn FnMut(&SolverState),
) -> Result<(SymMatrix, SolveReport)> {
    let (s, lambda, penalty) = (state.s.clone(), state.lambda, state.penalty);
    let (state, sweeps_used, converged, objective_trace) = run(state, config, observer)?;
    let (final_objective, residual) = match penalty {
        Penalty::L0 => (
            l0::objective(&state.x, &s, lambda)?,
            l0::fixed_point_residuals(&state.x, &s, lambda)?.max_nonzero_residual,
        ),
        Penalty::L1 => (
            l1::objective(&state.x, &s, lambda)?,
            l1::kkt_residuals(&state.x, &s, lambda)?.max_nonzero_residual,
        ),
    };
    let report = SolveReport {
        sweeps_used,
        converged,
        final_objective,
        nnz_offdiag: state.x.count_offdiag_nonzeros(),
        fixed_point_max_residual: residual,
        objective_trace,
    };
    Ok((state.into_x(), report))
}

/// Solve from the diagonal start with either penalty.
pub fn solve(s: &SymMatrix, lambda: f64, penalty: Penalty, config: &SolverConfig) -> Result<(SymMatrix, SolveReport)> {
    solve_state(SolverState::init(s, lambda, penalty)?, config, &mut |_| {})
}

