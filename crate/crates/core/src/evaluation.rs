//! Metrics (Gaussian KL divergence, EBIC, support recovery), λ-path sweeps,
//! oracle and EBIC selection, and replicate aggregation.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cd::{self, Penalty, SolverConfig, SolverState};
use crate::error::{Error, Result};
use crate::l0;
use crate::matrix::{self, SymMatrix};
use crate::model_gen::GroundTruth;

/// Default extended-BIC exponent.
pub const DEFAULT_GAMMA: f64 = 0.5;
pub const DEFAULT_GRID_POINTS: usize = 40;
pub const DEFAULT_LAMBDA_MIN_FRACTION: f64 = 0.01;
pub const DEFAULT_LAMBDA_MAX_FRACTION: f64 = 1.2;

/// `−log det(Σ Ω̂) + tr(Σ Ω̂) − p`.
pub fn kl_divergence(omega_hat: &SymMatrix, sigma_true: &SymMatrix) -> Result<f64> {
    KlTarget::new(sigma_true)?.kl(omega_hat)
}

/// A true covariance with its log-determinant cached.
#[derive(Debug, Clone)]
pub struct KlTarget {
    sigma: SymMatrix,
    logdet_sigma: f64,
}

impl KlTarget {
    pub fn new(sigma: &SymMatrix) -> Result<Self> {
        Ok(KlTarget {
            logdet_sigma: matrix::logdet(sigma)?,
            sigma: sigma.clone(),
        })
    }

    pub fn kl(&self, omega_hat: &SymMatrix) -> Result<f64> {
        if omega_hat.dim() != self.sigma.dim() {
            return Err(Error::BadParams("estimate and covariance differ in size".into()));
        }
        let ld = matrix::logdet(omega_hat)?;
        let p = self.sigma.dim() as f64;
        Ok(-(self.logdet_sigma + ld) + self.sigma.trace_product(omega_hat) - p)
    }
}

/// `n(−log det Ω̂ + tr(S Ω̂)) + k log n + 4kγ log p`, `k` the off-diagonal
/// nonzero pairs `i < j`.
pub fn ebic(omega_hat: &SymMatrix, s: &SymMatrix, n: usize, gamma: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::BadParams("n must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::BadParams(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    let ld = matrix::logdet(omega_hat)?;
    let k = omega_hat.count_offdiag_nonzeros() as f64;
    let (n, p) = (n as f64, omega_hat.dim() as f64);
    Ok(n * (-ld + s.trace_product(omega_hat)) + k * n.ln() + 4.0 * k * gamma * p.ln())
}

/// `(TPR, FPR)` of the off-diagonal support over pairs `i < j`.
pub fn support_metrics(omega_hat: &SymMatrix, truth: &GroundTruth) -> (f64, f64) {
    let p = truth.dim();
    let (mut tp, mut fp, mut positives) = (0usize, 0usize, 0usize);
    for i in 0..p {
        for j in (i + 1)..p {
            let actual = truth.omega.get(i, j) != 0.0;
            let found = omega_hat.get(i, j) != 0.0;
            positives += usize::from(actual);
            tp += usize::from(actual && found);
            fp += usize::from(!actual && found);
        }
    }
    let negatives = p * p.saturating_sub(1) / 2 - positives;
    let tpr = if positives == 0 { 1.0 } else { tp as f64 / positives as f64 };
    let fpr = if negatives == 0 { 0.0 } else { fp as f64 / negatives as f64 };
    (tpr, fpr)
}

/// Mean `|m_ij|` over the true support (`i < j`); `NaN` on an empty support.
pub fn mean_abs_on_support(m: &SymMatrix, truth: &GroundTruth) -> f64 {
    if truth.support.is_empty() {
        return f64::NAN;
    }
    let total: f64 = truth.support.iter().map(|&(i, j)| m.get(i, j).abs()).sum();
    total / truth.support.len() as f64
}

/// Largest λ at which some off-diagonal entry still enters from the diagonal
/// start. For l0 this is the largest crossover `2λ = gap`; for l1 it is
/// `max_{i<j} |s_ij|`.
pub fn default_lambda_bar(s: &SymMatrix, penalty: Penalty) -> Result<f64> {
    let p = s.dim();
    match penalty {
        Penalty::L1 => {
            cd::check_covariance(s)?;
            let mut best: f64 = 0.0;
            for i in 0..p {
                for j in (i + 1)..p {
                    best = best.max(s.get(i, j).abs());
                }
            }
            Ok(best)
        }
        Penalty::L0 => {
            // Φ is affine in λ with slope −2, so the crossover is (Φ(1) + 2)/2.
            let state = l0::init_state(s, 1.0)?;
            let mut best: f64 = 0.0;
            for i in 0..p {
                for j in (i + 1)..p {
                    let m = l0::minimizer_offdiag(&state, i, j)?;
                    let gap = l0::threshold_gap(&state, i, j, m);
                    best = best.max((gap + 2.0) / 2.0);
                }
            }
            Ok(best)
        }
    }
}

/// `points` linearly spaced values from `min` to `max` inclusive.
pub fn linear_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 || !(min > 0.0) || !max.is_finite() {
        return Err(Error::BadParams(format!(
            "grid needs points >= 1 and 0 < min, got points = {points}, min = {min}, max = {max}"
        )));
    }
    if points == 1 {
        return Ok(vec![min]);
    }
    if !(max > min) {
        return Err(Error::BadParams(format!("grid needs min < max, got {min} and {max}")));
    }
    let step = (max - min) / (points - 1) as f64;
    let mut g: Vec<f64> = (0..points).map(|k| min + step * k as f64).collect();
    g[points - 1] = max;
    Ok(g)
}

/// Default 40-point grid on `[0.01 λ̄, 1.2 λ̄]`.
pub fn default_grid(s: &SymMatrix, penalty: Penalty, points: usize) -> Result<Vec<f64>> {
    let bar = default_lambda_bar(s, penalty)?;
    if !(bar > 0.0) {
        return Err(Error::BadParams("covariance has no off-diagonal signal to scale a grid".into()));
    }
    linear_grid(DEFAULT_LAMBDA_MIN_FRACTION * bar, DEFAULT_LAMBDA_MAX_FRACTION * bar, points)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::BadParams("empty λ grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::BadParams("λ grid must be strictly increasing".into()));
    }
    Ok(())
}

/// What to score each path estimate against.
#[derive(Debug, Clone, Copy)]
pub struct Scoring<'a> {
    /// Sample count behind `S`, for EBIC.
    pub n: usize,
    pub gamma: f64,
    pub truth: Option<&'a GroundTruth>,
    pub keep_estimates: bool,
}

impl<'a> Scoring<'a> {
    pub fn new(n: usize) -> Self {
        Scoring {
            n,
            gamma: DEFAULT_GAMMA,
            truth: None,
            keep_estimates: false,
        }
    }

    pub fn with_truth(mut self, truth: &'a GroundTruth) -> Self {
        self.truth = Some(truth);
        self
    }
}

/// One grid point of a path. Metrics that need the truth are `NaN` without
/// one; a failed solve has `error` set and `converged = false`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathRecord {
    pub lambda: f64,
    pub kl: f64,
    pub ebic: f64,
    pub nnz: usize,
    pub converged: bool,
    pub sweeps: usize,
    pub tpr: f64,
    pub fpr: f64,
    pub support_amplitude: f64,
    pub error: Option<String>,
    #[serde(skip)]
    pub estimate: Option<SymMatrix>,
}

impl PathRecord {
    fn failed(lambda: f64, e: &Error) -> Self {
        PathRecord {
            lambda,
            kl: f64::NAN,
            ebic: f64::NAN,
            nnz: 0,
            converged: false,
            sweeps: 0,
            tpr: f64::NAN,
            fpr: f64::NAN,
            support_amplitude: f64::NAN,
            error: Some(e.to_string()),
            estimate: None,
        }
    }

    pub fn is_usable(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaPath {
    pub penalty: Penalty,
    pub grid: Vec<f64>,
    pub records: Vec<PathRecord>,
}

struct Scorer<'a> {
    s: &'a SymMatrix,
    scoring: Scoring<'a>,
    kl: Option<KlTarget>,
}

impl<'a> Scorer<'a> {
    fn new(s: &'a SymMatrix, scoring: Scoring<'a>) -> Result<Self> {
        let kl = scoring.truth.map(|t| KlTarget::new(&t.sigma)).transpose()?;
        Ok(Scorer { s, scoring, kl })
    }

    fn record(&self, lambda: f64, x: SymMatrix, converged: bool, sweeps: usize) -> Result<PathRecord> {
        let ebic_v = ebic(&x, self.s, self.scoring.n, self.scoring.gamma)?;
        let kl = self.kl.as_ref().map(|t| t.kl(&x)).transpose()?.unwrap_or(f64::NAN);
        let (tpr, fpr, amp) = match self.scoring.truth {
            Some(t) => {
                let (tpr, fpr) = support_metrics(&x, t);
                (tpr, fpr, mean_abs_on_support(&x, t))
            }
            None => (f64::NAN, f64::NAN, f64::NAN),
        };
        Ok(PathRecord {
            lambda,
            kl,
            ebic: ebic_v,
            nnz: x.count_offdiag_nonzeros(),
            converged,
            sweeps,
            tpr,
            fpr,
            support_amplitude: amp,
            error: None,
            estimate: self.scoring.keep_estimates.then_some(x),
        })
    }

    fn solve_from(&self, state: Result<SolverState>, lambda: f64, config: &SolverConfig) -> PathRecord {
        let run = state
            .and_then(|st| cd::solve_state(st, config, &mut |_| {}))
            .and_then(|(x, rep)| self.record(lambda, x, rep.converged, rep.sweeps_used));
        run.unwrap_or_else(|e| PathRecord::failed(lambda, &e))
    }
}

/// One independent solve per λ, each from the diagonal start. Grid points run
/// on the ambient rayon pool; results keep grid order.
pub fn lambda_sweep(
    s: &SymMatrix,
    grid: &[f64],
    penalty: Penalty,
    config: &SolverConfig,
    scoring: Scoring<'_>,
) -> Result<LambdaPath> {
    check_grid(grid)?;
    config.validate()?;
    let scorer = Scorer::new(s, scoring)?;
    let records = grid
        .par_iter()
        .map(|&lambda| scorer.solve_from(SolverState::init(s, lambda, penalty), lambda, config))
        .collect();
    Ok(LambdaPath {
        penalty,
        grid: grid.to_vec(),
        records,
    })
}

/// Sequential path where each λ starts from the previous estimate. For l0
/// this can land in different local minima than [`lambda_sweep`].
pub fn lambda_sweep_warm(
    s: &SymMatrix,
    grid: &[f64],
    penalty: Penalty,
    config: &SolverConfig,
    scoring: Scoring<'_>,
) -> Result<LambdaPath> {
    check_grid(grid)?;
    config.validate()?;
    let scorer = Scorer::new(s, scoring.clone_keeping())?;
    let mut records = Vec::with_capacity(grid.len());
    let mut start: Option<SymMatrix> = None;
    for &lambda in grid {
        let state = match start.take() {
            Some(x) => SolverState::from_iterate(x, s, lambda, penalty),
            None => SolverState::init(s, lambda, penalty),
        };
        let mut rec = scorer.solve_from(state, lambda, config);
        start = rec.estimate.clone();
        if !scoring.keep_estimates {
            rec.estimate = None;
        }
        records.push(rec);
    }
    Ok(LambdaPath {
        penalty,
        grid: grid.to_vec(),
        records,
    })
}

impl Scoring<'_> {
    fn clone_keeping(self) -> Self {
        Scoring {
            keep_estimates: true,
            ..self
        }
    }
}

/// Index of the smallest finite value; ties go to the lowest index.
pub fn argmin_first(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in values.into_iter().enumerate() {
        if v.is_finite() && best.is_none_or(|(_, b)| v < b) {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| k)
}

/// Grid point minimizing the true KL divergence: `(λ, KL)`.
pub fn oracle_select(path: &LambdaPath) -> Option<(f64, f64)> {
    let k = argmin_first(path.records.iter().map(|r| r.kl))?;
    Some((path.records[k].lambda, path.records[k].kl))
}

/// Grid point minimizing EBIC: `(λ, KL at that λ)`.
pub fn ebic_select(path: &LambdaPath) -> Option<(f64, f64)> {
    let k = argmin_first(path.records.iter().map(|r| r.ebic))?;
    Some((path.records[k].lambda, path.records[k].kl))
}

pub fn oracle_index(path: &LambdaPath) -> Option<usize> {
    argmin_first(path.records.iter().map(|r| r.kl))
}

pub fn ebic_index(path: &LambdaPath) -> Option<usize> {
    argmin_first(path.records.iter().map(|r| r.ebic))
}

/// Mean, standard error (`SD/√M`, zero when `M = 1`), min and max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub se: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    /// Non-finite values are skipped; `None` if nothing is left.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Stats> {
        let v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        let m = v.len() as f64;
        let mean = v.iter().sum::<f64>() / m;
        let se = if v.len() < 2 {
            0.0
        } else {
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
            (var / m).sqrt()
        };
        Some(Stats {
            count: v.len(),
            mean,
            se,
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

/// Per-replicate, per-solver outcome of the selection protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub alpha: f64,
    pub replicate_id: usize,
    pub solver: Penalty,
    pub truth_seed: u64,
    pub data_seed: u64,
    pub n: usize,
    pub p: usize,
    pub true_nnz: usize,
    pub chosen_lambda_oracle: f64,
    pub kl_oracle: f64,
    pub nnz_oracle: usize,
    pub chosen_lambda_ebic: f64,
    pub kl_ebic: f64,
    pub nnz_ebic: usize,
    /// Support recovery of the oracle estimate.
    pub tpr: f64,
    pub fpr: f64,
    /// Mean `|ω̂_ij|` of the oracle estimate over the true support.
    pub mean_abs_estimate_on_support: f64,
    pub mean_abs_true_support_amplitude: f64,
    pub failed_lambdas: usize,
}

impl RunRecord {
    pub fn from_path(
        path: &LambdaPath,
        truth: &GroundTruth,
        replicate_id: usize,
        data_seed: u64,
        n: usize,
    ) -> Result<RunRecord> {
        let oi = oracle_index(path).ok_or_else(|| Error::BadParams("no usable point on the λ path".into()))?;
        let ei = ebic_index(path).ok_or_else(|| Error::BadParams("no usable point on the λ path".into()))?;
        let (o, e) = (&path.records[oi], &path.records[ei]);
        Ok(RunRecord {
            alpha: truth.alpha,
            replicate_id,
            solver: path.penalty,
            truth_seed: truth.seed,
            data_seed,
            n,
            p: truth.dim(),
            true_nnz: truth.support.len(),
            chosen_lambda_oracle: o.lambda,
            kl_oracle: o.kl,
            nnz_oracle: o.nnz,
            chosen_lambda_ebic: e.lambda,
            kl_ebic: e.kl,
            nnz_ebic: e.nnz,
            tpr: o.tpr,
            fpr: o.fpr,
            mean_abs_estimate_on_support: o.support_amplitude,
            mean_abs_true_support_amplitude: mean_abs_on_support(&truth.omega, truth),
            failed_lambdas: path.records.iter().filter(|r| !r.is_usable()).count(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub solver: Penalty,
    pub replicates: usize,
    pub kl_oracle: Option<Stats>,
    pub kl_ebic: Option<Stats>,
    pub nnz_oracle: Option<Stats>,
    pub tpr: Option<Stats>,
    pub fpr: Option<Stats>,
    /// `mean |ω̂| / mean |ω|` over the true support at the oracle λ.
    pub shrinkage_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub solvers: Vec<SolverSummary>,
    /// `mean KL_l1 / mean KL_l0` at the oracle choice (ratio of means).
    pub kl_oracle_ratio_l1_over_l0: Option<f64>,
    pub kl_ebic_ratio_l1_over_l0: Option<f64>,
}

impl Summary {
    pub fn solver(&self, penalty: Penalty) -> Option<&SolverSummary> {
        self.solvers.iter().find(|s| s.solver == penalty)
    }
}

/// `mean(num) / mean(den)`.
pub fn ratio_of_means(num: &[f64], den: &[f64]) -> Option<f64> {
    let a = Stats::of(num.iter().copied())?;
    let b = Stats::of(den.iter().copied())?;
    Some(a.mean / b.mean)
}

/// Per-solver statistics and l1/l0 ratios.
pub fn aggregate(records: &[RunRecord]) -> Summary {
    let mut solvers = Vec::new();
    for penalty in [Penalty::L0, Penalty::L1] {
        let rs: Vec<&RunRecord> = records.iter().filter(|r| r.solver == penalty).collect();
        if rs.is_empty() {
            continue;
        }
        let est = Stats::of(rs.iter().map(|r| r.mean_abs_estimate_on_support));
        let tru = Stats::of(rs.iter().map(|r| r.mean_abs_true_support_amplitude));
        let shrinkage_ratio = match (est, tru) {
            (Some(a), Some(b)) => a.mean / b.mean,
            _ => f64::NAN,
        };
        solvers.push(SolverSummary {
            solver: penalty,
            replicates: rs.len(),
            kl_oracle: Stats::of(rs.iter().map(|r| r.kl_oracle)),
            kl_ebic: Stats::of(rs.iter().map(|r| r.kl_ebic)),
            nnz_oracle: Stats::of(rs.iter().map(|r| r.nnz_oracle as f64)),
            tpr: Stats::of(rs.iter().map(|r| r.tpr)),
            fpr: Stats::of(rs.iter().map(|r| r.fpr)),
            shrinkage_ratio,
        });
    }
    let ratio = |f: fn(&RunRecord) -> f64| {
        let pick = |p: Penalty| records.iter().filter(|r| r.solver == p).map(f).collect::<Vec<_>>();
        ratio_of_means(&pick(Penalty::L1), &pick(Penalty::L0))
    };
    Summary {
        solvers,
        kl_oracle_ratio_l1_over_l0: ratio(|r| r.kl_oracle),
        kl_ebic_ratio_l1_over_l0: ratio(|r| r.kl_ebic),
    }
}

#[derive(Serialize)]
struct PathRow {
    lambda: f64,
    kl: f64,
    ebic: f64,
    nnz: usize,
    converged: bool,
}

/// Path table with header `lambda,kl,ebic,nnz,converged`.
pub fn write_path_csv<W: Write>(w: W, path: &LambdaPath) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in &path.records {
        out.serialize(PathRow {
            lambda: r.lambda,
            kl: r.kl,
            ebic: r.ebic,
            nnz: r.nnz,
            converged: r.converged,
        })
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// One row per record, columns in [`RunRecord`] field order.
pub fn write_records_csv<W: Write>(w: W, records: &[RunRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_gen::{self, GraphKind};

    fn record(lambda: f64, kl: f64, ebic: f64) -> PathRecord {
        PathRecord {
            lambda,
            kl,
            ebic,
            nnz: 0,
            converged: true,
            sweeps: 1,
            tpr: f64::NAN,
            fpr: f64::NAN,
            support_amplitude: f64::NAN,
            error: None,
            estimate: None,
        }
    }

    fn path_of(kls: &[f64]) -> LambdaPath {
        let records: Vec<_> = kls.iter().enumerate().map(|(k, &v)| record(0.1 * (k + 1) as f64, v, v)).collect();
        LambdaPath {
            penalty: Penalty::L0,
            grid: records.iter().map(|r| r.lambda).collect(),
            records,
        }
    }

    #[test]
    fn kl_cases() {
        let sigma = SymMatrix::from_rows(
            &[vec![2.0, 0.3, 0.0], vec![0.3, 1.0, 0.2], vec![0.0, 0.2, 1.5]],
            0.0,
        )
        .unwrap();
        let omega = matrix::inverse_pd(&sigma).unwrap();
        assert!(kl_divergence(&omega, &sigma).unwrap().abs() < 1e-12);

        let mut d = SymMatrix::identity(3);
        d.set(0, 0, 2.0);
        let v = kl_divergence(&d, &SymMatrix::identity(3)).unwrap();
        assert!((v - (1.0 - 2f64.ln())).abs() < 1e-12);
        assert!((v - 0.3069).abs() < 1e-4);

        let scaled = SymMatrix::from_upper_fn(3, |i, j| 2.0 * omega.get(i, j));
        let v = kl_divergence(&scaled, &sigma).unwrap();
        assert!((v - 3.0 * (1.0 - 2f64.ln())).abs() < 1e-12);
        assert!((v - 0.9206).abs() < 1e-4);

        let bad = SymMatrix::from_diag(&[1.0, -1.0, 1.0]);
        assert!(matches!(kl_divergence(&bad, &sigma), Err(Error::NotPd { .. })));
    }

    #[test]
    fn ebic_cases() {
        let s = SymMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]], 0.0).unwrap();
        let x = SymMatrix::from_diag(&[0.5, 1.0]);
        // −log det = ln 2, tr(SX) = 2, k = 0.
        let v = ebic(&x, &s, 10, 0.5).unwrap();
        assert!((v - 10.0 * (2f64.ln() + 2.0)).abs() < 1e-12);

        let p = 6;
        let mut dense = SymMatrix::identity(p);
        dense.set(0, 1, 0.1);
        let mut denser = dense.clone();
        denser.set(2, 3, 0.1);
        let s = SymMatrix::identity(p);
        // Equal fit: tr(S X) and log det are unchanged by these symmetric
        // perturbations only to second order, so compare the penalty part.
        let fit = |x: &SymMatrix| 50.0 * (-matrix::logdet(x).unwrap() + s.trace_product(x));
        let pen1 = ebic(&dense, &s, 50, 0.5).unwrap() - fit(&dense);
        let pen2 = ebic(&denser, &s, 50, 0.5).unwrap() - fit(&denser);
        assert!(pen1 < pen2);
        assert!((pen2 - 2.0 * pen1).abs() < 1e-9);
        let bic = ebic(&dense, &s, 50, 0.0).unwrap() - fit(&dense);
        assert!((bic - 50f64.ln()).abs() < 1e-9);
        assert!((pen1 - (50f64.ln() + 2.0 * (p as f64).ln())).abs() < 1e-9);
    }

    #[test]
    fn support_metric_corners() {
        let entries = [(0, 1, 0.4), (1, 2, -0.3)];
        let truth = GroundTruth::from_offdiag(4, &entries, GraphKind::Nsw, 1.0, 0).unwrap();
        assert_eq!(support_metrics(&truth.omega, &truth), (1.0, 0.0));
        assert_eq!(support_metrics(&SymMatrix::identity(4), &truth), (0.0, 0.0));
        // One hit (0,1), one miss (1,2), one false alarm (2,3); 4 non-edges.
        let mut est = SymMatrix::identity(4);
        est.set(0, 1, 0.2);
        est.set(2, 3, 0.1);
        assert_eq!(support_metrics(&est, &truth), (0.5, 0.25));
        let empty = GroundTruth::from_offdiag(3, &[], GraphKind::Nsw, 1.0, 0).unwrap();
        assert_eq!(support_metrics(&SymMatrix::identity(3), &empty), (1.0, 0.0));
    }

    #[test]
    fn selection_rules() {
        let one = path_of(&[4.0]);
        assert_eq!(oracle_select(&one), Some((0.1, 4.0)));
        assert_eq!(ebic_select(&one), Some((0.1, 4.0)));
        assert_eq!(oracle_select(&path_of(&[3.0, 1.0, 2.0])).unwrap().1, 1.0);
        assert!((oracle_select(&path_of(&[3.0, 1.0, 2.0])).unwrap().0 - 0.2).abs() < 1e-15);
        assert!((oracle_select(&path_of(&[1.0, 1.0, 2.0])).unwrap().0 - 0.1).abs() < 1e-15);
        assert_eq!(oracle_select(&path_of(&[f64::NAN, 2.0])).unwrap().1, 2.0);
        assert_eq!(oracle_select(&path_of(&[f64::NAN])), None);
    }

    #[test]
    fn stats_and_ratios() {
        let s = Stats::of([5.0]).unwrap();
        assert_eq!((s.mean, s.se), (5.0, 0.0));
        let s = Stats::of([1.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert!((s.se - 1.0).abs() < 1e-15);
        assert_eq!((s.min, s.max), (1.0, 3.0));
        // Ratio of means differs from mean of ratios here.
        let r = ratio_of_means(&[2.0, 4.0], &[1.0, 4.0]).unwrap();
        assert!((r - 6.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn grids() {
        assert_eq!(linear_grid(0.5, 2.0, 1).unwrap(), vec![0.5]);
        let g = linear_grid(0.1, 0.5, 5).unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[2] - 0.3).abs() < 1e-15);
        assert_eq!(g[4], 0.5);
        assert!(linear_grid(0.5, 0.1, 3).is_err());
        assert!(linear_grid(0.0, 0.1, 3).is_err());
    }

    #[test]
    fn lambda_bar_matches_crossover() {
        let s = SymMatrix::from_rows(&[vec![1.0, 0.75], vec![0.75, 1.0]], 0.0).unwrap();
        let bar = default_lambda_bar(&s, Penalty::L0).unwrap();
        assert!((bar - 0.2327).abs() < 1e-4, "{bar}");
        assert_eq!(default_lambda_bar(&s, Penalty::L1).unwrap(), 0.75);
        let cfg = SolverConfig::default();
        let above = lambda_sweep(&s, &[bar * 1.01], Penalty::L0, &cfg, Scoring::new(10)).unwrap();
        assert_eq!(above.records[0].nnz, 0);
        let below = lambda_sweep(&s, &[bar * 0.99], Penalty::L0, &cfg, Scoring::new(10)).unwrap();
        assert_eq!(below.records[0].nnz, 1);
    }

    #[test]
    fn single_point_path_equals_direct_solve() {
        let truth = model_gen::gen_nsw(8, 12, 3).unwrap();
        let d = model_gen::sample_gaussian(&truth.sigma, 40, 4).unwrap();
        let s = model_gen::sample_cov(&d);
        let cfg = SolverConfig::default();
        let mut sc = Scoring::new(40).with_truth(&truth);
        sc.keep_estimates = true;
        let path = lambda_sweep(&s, &[0.1], Penalty::L0, &cfg, sc).unwrap();
        let (x, rep) = l0::solve(&s, 0.1, &cfg).unwrap();
        assert_eq!(path.records[0].estimate.as_ref().unwrap(), &x);
        assert_eq!(path.records[0].nnz, rep.nnz_offdiag);
        assert_eq!(path.records[0].kl, kl_divergence(&x, &truth.sigma).unwrap());
    }

    #[test]
    fn l1_path_support_shrinks() {
        let truth = model_gen::gen_nsw(10, 20, 5).unwrap();
        let d = model_gen::sample_gaussian(&truth.sigma, 50, 6).unwrap();
        let s = model_gen::sample_cov(&d);
        let grid = default_grid(&s, Penalty::L1, 25).unwrap();
        let path = lambda_sweep(&s, &grid, Penalty::L1, &SolverConfig::default(), Scoring::new(50)).unwrap();
        for w in path.records.windows(2) {
            assert!(w[1].nnz <= w[0].nnz, "{} -> {}", w[0].nnz, w[1].nnz);
        }
        assert_eq!(path.records.last().unwrap().nnz, 0);
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        let s = SymMatrix::from_diag(&[1.0, 0.0]);
        let path = lambda_sweep(&s, &[0.1, 0.2], Penalty::L0, &SolverConfig::default(), Scoring::new(5)).unwrap();
        assert!(path.records.iter().all(|r| !r.converged && r.error.is_some()));
        assert!(lambda_sweep(&s, &[0.2, 0.1], Penalty::L0, &SolverConfig::default(), Scoring::new(5)).is_err());
    }

    #[test]
    fn warm_path_runs() {
        let truth = model_gen::gen_nsw(8, 12, 7).unwrap();
        let d = model_gen::sample_gaussian(&truth.sigma, 40, 8).unwrap();
        let s = model_gen::sample_cov(&d);
        let grid = default_grid(&s, Penalty::L1, 6).unwrap();
        let cold = lambda_sweep(&s, &grid, Penalty::L1, &SolverConfig::default(), Scoring::new(40)).unwrap();
        let warm = lambda_sweep_warm(&s, &grid, Penalty::L1, &SolverConfig::default(), Scoring::new(40)).unwrap();
        assert!(warm.records.iter().all(|r| r.estimate.is_none() && r.is_usable()));
        // Convex problem: both reach the same optimum up to termination slack.
        for (a, b) in cold.records.iter().zip(&warm.records) {
            assert!((a.ebic - b.ebic).abs() <= 1e-3 * a.ebic.abs());
        }
    }

    #[test]
    fn path_csv_header() {
        let mut buf = Vec::new();
        write_path_csv(&mut buf, &path_of(&[1.0, 2.0])).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "lambda,kl,ebic,nnz,converged");
        assert_eq!(text.lines().count(), 3);
    }
}
