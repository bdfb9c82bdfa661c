//! The simulation protocol: for each sparsity level α generate `Ω(α)`, then
//! per replicate draw data, form `S`, sweep each solver over a λ grid, and
//! record the oracle and EBIC selections. Emits plot-ready tables.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cd::{Penalty, SolverConfig};
use crate::error::{Error, Result};
use crate::evaluation::{self, LambdaPath, RunRecord, Scoring, Stats, Summary};
use crate::model_gen::{self, GraphKind, GroundTruth};
use crate::seed;

/// Off-diagonal density (both triangles, fraction of `p²`) of `Ω(1)`.
pub const SPARSE_DENSITY: f64 = 0.015;
/// Off-diagonal density of `Ω(0)`.
pub const DENSE_DENSITY: f64 = 0.22;
/// A run fails once more than this fraction of replicates fail.
pub const MAX_FAILURE_FRACTION: f64 = 0.10;

// Seed-path tags.
const TAG_TRUTH1: u64 = 1;
const TAG_TRUTH0: u64 = 2;
const TAG_INTERP: u64 = 3;

/// λ grid: `points` values; missing endpoints default to `0.01 λ̄` and
/// `1.2 λ̄`, with `λ̄` computed per solver from each replicate's `S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points: usize,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points: evaluation::DEFAULT_GRID_POINTS,
            lambda_min: None,
            lambda_max: None,
        }
    }
}

impl GridSpec {
    pub fn resolve(&self, s: &crate::SymMatrix, penalty: Penalty) -> Result<Vec<f64>> {
        let bar = match (self.lambda_min, self.lambda_max) {
            (Some(_), Some(_)) => f64::NAN,
            _ => evaluation::default_lambda_bar(s, penalty)?,
        };
        let min = self.lambda_min.unwrap_or(evaluation::DEFAULT_LAMBDA_MIN_FRACTION * bar);
        let max = self.lambda_max.unwrap_or(evaluation::DEFAULT_LAMBDA_MAX_FRACTION * bar);
        evaluation::linear_grid(min, max, self.points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub p: usize,
    pub n: usize,
    pub alphas: Vec<f64>,
    /// Replicates per α.
    pub replicates: usize,
    pub solvers: Vec<Penalty>,
    pub grid: GridSpec,
    pub master_seed: u64,
    pub gamma: f64,
    pub graph: GraphKind,
    /// Draw a new `Ω(α)` for every replicate instead of once per α.
    pub fresh_truth: bool,
    pub warm_start: bool,
    /// Worker threads; 0 lets the pool choose.
    pub jobs: usize,
    pub solver: SolverConfig,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            p: 100,
            n: 70,
            alphas: vec![1.0],
            replicates: 15,
            solvers: vec![Penalty::L0, Penalty::L1],
            grid: GridSpec::default(),
            master_seed: 0,
            gamma: evaluation::DEFAULT_GAMMA,
            graph: GraphKind::Nsw,
            fresh_truth: false,
            warm_start: false,
            jobs: 1,
            solver: SolverConfig::default(),
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// Replicate count and grid resolution of the published protocol.
    pub fn paper_scale(mut self) -> Self {
        self.replicates = 50;
        self.grid.points = 200;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BadParams(m));
        if self.p < 2 {
            return bad(format!("p must be at least 2, got {}", self.p));
        }
        if self.n < 1 {
            return bad("n must be at least 1".into());
        }
        if self.replicates < 1 {
            return bad("M must be at least 1".into());
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return bad(format!("alphas must be nonempty and within [0, 1], got {:?}", self.alphas));
        }
        if self.solvers.is_empty() {
            return bad("no solver selected".into());
        }
        if self.grid.points == 0 {
            return bad("grid needs at least one point".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        self.solver.validate()
    }

    /// Applies one `key = value` setting (config files use the flag names).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Parse(format!("bad value for {key}: {v:?}")))
        }
        let key = key.trim().trim_start_matches("--").replace('_', "-").to_ascii_lowercase();
        let value = value.trim();
        match key.as_str() {
            "p" => self.p = num(&key, value)?,
            "n" => self.n = num(&key, value)?,
            "alpha" => {
                self.alphas = value
                    .split(',')
                    .map(|a| num(&key, a.trim()))
                    .collect::<Result<Vec<f64>>>()?
            }
            "m" | "replicates" => self.replicates = num(&key, value)?,
            "solver" => self.solvers = parse_solvers(value)?,
            "lambda-min" => self.grid.lambda_min = Some(num(&key, value)?),
            "lambda-max" => self.grid.lambda_max = Some(num(&key, value)?),
            "grid-points" => self.grid.points = num(&key, value)?,
            "gamma" => self.gamma = num(&key, value)?,
            "seed" => self.master_seed = num(&key, value)?,
            "jobs" => self.jobs = num(&key, value)?,
            "graph" => self.graph = value.parse()?,
            "fresh-truth" => self.fresh_truth = num(&key, value)?,
            "warm-start" => self.warm_start = num(&key, value)?,
            "rel-tol" => self.solver.rel_tol = num(&key, value)?,
            "max-sweeps" => self.solver.max_sweeps = num(&key, value)?,
            "out" => self.out_dir = Some(PathBuf::from(value)),
            "paper-scale" => {
                if num::<bool>(&key, value)? {
                    *self = self.clone().paper_scale();
                }
            }
            other => return Err(Error::Parse(format!("unknown setting {other:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", k + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }
}

/// `l0`, `l1` or `both`.
pub fn parse_solvers(s: &str) -> Result<Vec<Penalty>> {
    match s.trim().to_ascii_lowercase().as_str() {
        "both" => Ok(vec![Penalty::L0, Penalty::L1]),
        one => Ok(vec![one.parse()?]),
    }
}

/// Even off-diagonal count closest to `density · p²`, within `p(p−1)`.
pub fn nnz_for_density(p: usize, density: f64) -> usize {
    let pairs = (density * (p * p) as f64 / 2.0).round() as usize;
    2 * pairs.min(p * (p - 1) / 2)
}

/// Attachment count whose preferential-attachment edge total is closest to
/// `nnz_target / 2` pairs.
pub fn attach_for_nnz(p: usize, nnz_target: usize) -> usize {
    let pairs = (nnz_target / 2) as i64;
    (1..p)
        .min_by_key(|&m| {
            let edges = (m * (m - 1) / 2 + (p - m) * m) as i64;
            (edges - pairs).abs()
        })
        .unwrap_or(1)
}

fn gen_endpoint(kind: GraphKind, p: usize, density: f64, seed: u64) -> Result<GroundTruth> {
    let nnz = nnz_for_density(p, density);
    match kind {
        GraphKind::Nsw => model_gen::gen_nsw(p, nnz, seed),
        GraphKind::Sw => model_gen::gen_sw(p, attach_for_nnz(p, nnz), seed),
    }
}

/// `Ω(α)` from the seed path `base`: endpoints then the Bernoulli mix.
pub fn truth_for(config: &ExperimentConfig, alpha: f64, base: u64) -> Result<GroundTruth> {
    let t1 = gen_endpoint(config.graph, config.p, SPARSE_DENSITY, seed::derive(base, &[TAG_TRUTH1]))?;
    let t0 = gen_endpoint(config.graph, config.p, DENSE_DENSITY, seed::derive(base, &[TAG_TRUTH0]))?;
    model_gen::interpolate(&t1, &t0, alpha, seed::derive(base, &[TAG_INTERP]))
}

/// Paths and records of one replicate.
#[derive(Debug, Clone)]
pub struct ReplicateOutcome {
    pub replicate_id: usize,
    pub data_seed: u64,
    pub truth_seed: u64,
    pub paths: Vec<LambdaPath>,
    pub records: Vec<RunRecord>,
}

#[derive(Debug, Clone)]
pub struct AlphaGroup {
    pub alpha_index: usize,
    pub alpha: f64,
    pub outcomes: Vec<ReplicateOutcome>,
    pub failures: Vec<(usize, String)>,
    pub summary: Summary,
}

impl AlphaGroup {
    pub fn records(&self) -> Vec<RunRecord> {
        self.outcomes.iter().flat_map(|o| o.records.iter().cloned()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub groups: Vec<AlphaGroup>,
}

impl ExperimentResult {
    pub fn records(&self) -> Vec<RunRecord> {
        self.groups.iter().flat_map(|g| g.records()).collect()
    }
}

fn run_replicate(
    config: &ExperimentConfig,
    alpha_index: usize,
    alpha: f64,
    rep: usize,
    shared: Option<&GroundTruth>,
) -> Result<ReplicateOutcome> {
    let rep_seed = seed::replicate_seed(config.master_seed, alpha_index, rep);
    let owned;
    let truth = match shared {
        Some(t) => t,
        None => {
            owned = truth_for(config, alpha, rep_seed)?;
            &owned
        }
    };
    let data_seed = seed::derive(rep_seed, &[0]);
    let mut data = model_gen::sample_gaussian(&truth.sigma, config.n, data_seed)?;
    data.truth_seed = Some(truth.seed);
    let s = model_gen::sample_cov(&data);
    let scoring = Scoring {
        gamma: config.gamma,
        ..Scoring::new(config.n).with_truth(truth)
    };
    let mut paths = Vec::new();
    let mut records = Vec::new();
    for &penalty in &config.solvers {
        let grid = config.grid.resolve(&s, penalty)?;
        let path = if config.warm_start {
            evaluation::lambda_sweep_warm(&s, &grid, penalty, &config.solver, scoring)?
        } else {
            evaluation::lambda_sweep(&s, &grid, penalty, &config.solver, scoring)?
        };
        records.push(RunRecord::from_path(&path, truth, rep, data_seed, config.n)?);
        paths.push(path);
    }
    Ok(ReplicateOutcome {
        replicate_id: rep,
        data_seed,
        truth_seed: truth.seed,
        paths,
        records,
    })
}

/// Runs `f` on a dedicated pool of `jobs` threads (0: pool default).
pub fn install_in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::BadParams(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs the protocol and returns every path and record, without writing.
pub fn simulate(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    install_in_pool(config.jobs, || simulate_in_pool(config))?
}

fn simulate_in_pool(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let mut groups = Vec::with_capacity(config.alphas.len());
    let mut failed = 0usize;
    for (alpha_index, &alpha) in config.alphas.iter().enumerate() {
        let shared = if config.fresh_truth {
            None
        } else {
            let base = seed::derive(config.master_seed, &[alpha_index as u64, u64::MAX]);
            Some(truth_for(config, alpha, base)?)
        };
        let results: Vec<Result<ReplicateOutcome>> = (0..config.replicates)
            .into_par_iter()
            .map(|rep| run_replicate(config, alpha_index, alpha, rep, shared.as_ref()))
            .collect();
        let mut outcomes = Vec::new();
        let mut failures = Vec::new();
        for (rep, r) in results.into_iter().enumerate() {
            match r {
                Ok(o) => outcomes.push(o),
                Err(e) => failures.push((rep, e.to_string())),
            }
        }
        failed += failures.len();
        let records: Vec<RunRecord> = outcomes.iter().flat_map(|o| o.records.iter().cloned()).collect();
        groups.push(AlphaGroup {
            alpha_index,
            alpha,
            summary: evaluation::aggregate(&records),
            outcomes,
            failures,
        });
    }
    let total = config.replicates * config.alphas.len();
    if failed as f64 > MAX_FAILURE_FRACTION * total as f64 {
        let first = groups
            .iter()
            .flat_map(|g| g.failures.first())
            .next()
            .map(|(_, e)| e.clone())
            .unwrap_or_default();
        return Err(Error::BadParams(format!(
            "{failed} of {total} replicates failed (first: {first})"
        )));
    }
    Ok(ExperimentResult { groups })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlRatioRow {
    pub alpha: f64,
    pub oracle_ratio: f64,
    pub ebic_ratio: f64,
    pub l0_kl_oracle_mean: f64,
    pub l0_kl_oracle_se: f64,
    pub l1_kl_oracle_mean: f64,
    pub l1_kl_oracle_se: f64,
    pub l0_kl_ebic_mean: f64,
    pub l1_kl_ebic_mean: f64,
}

/// KL ratio `l1 / l0` against α.
pub fn kl_ratio_table(result: &ExperimentResult) -> Vec<KlRatioRow> {
    let pick = |g: &AlphaGroup, p: Penalty, f: fn(&evaluation::SolverSummary) -> Option<Stats>| {
        g.summary.solver(p).and_then(f)
    };
    result
        .groups
        .iter()
        .map(|g| {
            let l0o = pick(g, Penalty::L0, |s| s.kl_oracle);
            let l1o = pick(g, Penalty::L1, |s| s.kl_oracle);
            let l0e = pick(g, Penalty::L0, |s| s.kl_ebic);
            let l1e = pick(g, Penalty::L1, |s| s.kl_ebic);
            let mean = |s: Option<Stats>| s.map_or(f64::NAN, |s| s.mean);
            let se = |s: Option<Stats>| s.map_or(f64::NAN, |s| s.se);
            KlRatioRow {
                alpha: g.alpha,
                oracle_ratio: g.summary.kl_oracle_ratio_l1_over_l0.unwrap_or(f64::NAN),
                ebic_ratio: g.summary.kl_ebic_ratio_l1_over_l0.unwrap_or(f64::NAN),
                l0_kl_oracle_mean: mean(l0o),
                l0_kl_oracle_se: se(l0o),
                l1_kl_oracle_mean: mean(l1o),
                l1_kl_oracle_se: se(l1o),
                l0_kl_ebic_mean: mean(l0e),
                l1_kl_ebic_mean: mean(l1e),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocRow {
    pub lambda: f64,
    pub tpr_mean: f64,
    pub fpr_mean: f64,
    pub solver: Penalty,
}

/// Replicate-averaged `(TPR, FPR)` per grid index and solver. With per-replicate
/// default grids the `lambda` column is the mean λ at that index.
pub fn roc_table(group: &AlphaGroup) -> Vec<RocRow> {
    let mut rows = Vec::new();
    let solvers: Vec<Penalty> = group
        .outcomes
        .first()
        .map(|o| o.paths.iter().map(|p| p.penalty).collect())
        .unwrap_or_default();
    for (k, penalty) in solvers.into_iter().enumerate() {
        let paths: Vec<&LambdaPath> = group.outcomes.iter().map(|o| &o.paths[k]).collect();
        let points = paths.iter().map(|p| p.records.len()).min().unwrap_or(0);
        for g in 0..points {
            let at = |f: fn(&evaluation::PathRecord) -> f64| {
                Stats::of(paths.iter().map(|p| f(&p.records[g]))).map_or(f64::NAN, |s| s.mean)
            };
            rows.push(RocRow {
                lambda: at(|r| r.lambda),
                tpr_mean: at(|r| r.tpr),
                fpr_mean: at(|r| r.fpr),
                solver: penalty,
            });
        }
    }
    rows
}

/// Area under the ROC curve of `(fpr, tpr)` points on `[0, fpr_max]`,
/// anchored at the origin, linearly interpolated and held flat past the
/// last point. Normalized by `fpr_max`.
pub fn partial_auc(points: &[(f64, f64)], fpr_max: f64) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.iter().copied().filter(|(f, t)| f.is_finite() && t.is_finite()).collect();
    pts.push((0.0, 0.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    // Upper envelope: keep the best TPR reached at or below each FPR.
    let mut env: Vec<(f64, f64)> = Vec::new();
    for (f, t) in pts {
        let best = env.last().map_or(t, |&(_, bt)| bt.max(t));
        match env.last_mut() {
            Some(last) if last.0 == f => last.1 = best,
            _ => env.push((f, best)),
        }
    }
    let mut area = 0.0;
    for w in env.windows(2) {
        let ((f0, t0), (f1, t1)) = (w[0], w[1]);
        if f0 >= fpr_max {
            break;
        }
        let end = f1.min(fpr_max);
        let t_end = t0 + (t1 - t0) * (end - f0) / (f1 - f0);
        area += (end - f0) * (t0 + t_end) / 2.0;
    }
    if let Some(&(f_last, t_last)) = env.last() {
        if f_last < fpr_max {
            area += (fpr_max - f_last) * t_last;
        }
    }
    area / fpr_max
}

/// Per-solver ROC points of a table.
pub fn roc_points(rows: &[RocRow], solver: Penalty) -> Vec<(f64, f64)> {
    rows.iter().filter(|r| r.solver == solver).map(|r| (r.fpr_mean, r.tpr_mean)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeRow {
    pub solver: Penalty,
    pub mean_abs_estimate: f64,
    pub mean_abs_truth: f64,
    pub shrinkage_ratio: f64,
}

/// Mean `|ω̂|` over the true support at the oracle λ against mean `|ω|`.
pub fn amplitude_report(records: &[RunRecord]) -> Vec<AmplitudeRow> {
    let mut rows = Vec::new();
    for solver in [Penalty::L0, Penalty::L1] {
        let rs: Vec<&RunRecord> = records.iter().filter(|r| r.solver == solver).collect();
        let est = Stats::of(rs.iter().map(|r| r.mean_abs_estimate_on_support));
        let tru = Stats::of(rs.iter().map(|r| r.mean_abs_true_support_amplitude));
        if let (Some(e), Some(t)) = (est, tru) {
            rows.push(AmplitudeRow {
                solver,
                mean_abs_estimate: e.mean,
                mean_abs_truth: t.mean,
                shrinkage_ratio: e.mean / t.mean,
            });
        }
    }
    rows
}

/// `mean |est|` over `truth`'s support divided by `mean |ω|` there.
pub fn shrinkage_ratio(estimate: &crate::SymMatrix, truth: &GroundTruth) -> f64 {
    evaluation::mean_abs_on_support(estimate, truth) / evaluation::mean_abs_on_support(&truth.omega, truth)
}

#[derive(Serialize)]
struct PathTableRow {
    alpha: f64,
    replicate_id: usize,
    solver: Penalty,
    grid_index: usize,
    lambda: f64,
    kl: f64,
    ebic: f64,
    nnz: usize,
    converged: bool,
    tpr: f64,
    fpr: f64,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    config: &'a ExperimentConfig,
    groups: Vec<GroupSummary<'a>>,
}

#[derive(Serialize)]
struct GroupSummary<'a> {
    alpha: f64,
    replicates_ok: usize,
    failures: &'a [(usize, String)],
    summary: &'a Summary,
    amplitude: Vec<AmplitudeRow>,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_rows<T: Serialize>(w: impl Write, rows: &[T]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(evaluation::csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `records.csv`, `paths.csv`, `kl_ratio.csv` and `summary.json`.
pub fn write_outputs(result: &ExperimentResult, config: &ExperimentConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    evaluation::write_records_csv(create(dir, "records.csv")?, &result.records())?;

    let mut rows = Vec::new();
    for g in &result.groups {
        for o in &g.outcomes {
            for path in &o.paths {
                for (k, r) in path.records.iter().enumerate() {
                    rows.push(PathTableRow {
                        alpha: g.alpha,
                        replicate_id: o.replicate_id,
                        solver: path.penalty,
                        grid_index: k,
                        lambda: r.lambda,
                        kl: r.kl,
                        ebic: r.ebic,
                        nnz: r.nnz,
                        converged: r.converged,
                        tpr: r.tpr,
                        fpr: r.fpr,
                    });
                }
            }
        }
    }
    write_rows(create(dir, "paths.csv")?, &rows)?;
    write_rows(create(dir, "kl_ratio.csv")?, &kl_ratio_table(result))?;

    let summary = SummaryFile {
        config,
        groups: result
            .groups
            .iter()
            .map(|g| GroupSummary {
                alpha: g.alpha,
                replicates_ok: g.outcomes.len(),
                failures: &g.failures,
                summary: &g.summary,
                amplitude: amplitude_report(&g.records()),
            })
            .collect(),
    };
    let mut w = create(dir, "summary.json")?;
    serde_json::to_writer_pretty(&mut w, &summary)?;
    w.flush()?;
    Ok(())
}

/// Full protocol; writes tables when `config.out_dir` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let result = simulate(config)?;
    if let Some(dir) = &config.out_dir {
        write_outputs(&result, config, dir)?;
    }
    Ok(result)
}

/// Replicate-averaged ROC for a single α; writes `roc.csv` when
/// `config.out_dir` is set.
pub fn run_roc(config: &ExperimentConfig) -> Result<Vec<RocRow>> {
    if config.alphas.len() != 1 {
        return Err(Error::BadParams("roc takes exactly one alpha".into()));
    }
    let result = simulate(config)?;
    let rows = roc_table(&result.groups[0]);
    if let Some(dir) = &config.out_dir {
        fs::create_dir_all(dir)?;
        write_rows(create(dir, "roc.csv")?, &rows)?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            p: 5,
            n: 20,
            replicates: 2,
            grid: GridSpec {
                points: 4,
                ..GridSpec::default()
            },
            master_seed: 42,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn density_helpers() {
        assert_eq!(nnz_for_density(100, 0.015), 150);
        assert_eq!(nnz_for_density(100, 0.22), 2200);
        assert_eq!(nnz_for_density(3, 0.9), 6);
        assert_eq!(attach_for_nnz(100, 150), 1);
        assert_eq!(attach_for_nnz(100, 2200), 12);
    }

    #[test]
    fn config_parsing() {
        let mut c = ExperimentConfig::default();
        c.apply_config_text("# desk run\np = 30\nalpha = 1, 0.5\nsolver = l1\nlambda_min = 0.05\nM=3\n")
            .unwrap();
        assert_eq!((c.p, c.replicates), (30, 3));
        assert_eq!(c.alphas, vec![1.0, 0.5]);
        assert_eq!(c.solvers, vec![Penalty::L1]);
        assert_eq!(c.grid.lambda_min, Some(0.05));
        assert!(c.apply_config_text("bogus = 1").is_err());
        assert!(c.apply_config_text("p 3").is_err());
        c.set("paper-scale", "true").unwrap();
        assert_eq!((c.replicates, c.grid.points), (50, 200));
    }

    #[test]
    fn validation() {
        assert!(ExperimentConfig { p: 1, ..tiny() }.validate().is_err());
        assert!(ExperimentConfig { replicates: 0, ..tiny() }.validate().is_err());
        assert!(ExperimentConfig { alphas: vec![1.5], ..tiny() }.validate().is_err());
        assert!(tiny().validate().is_ok());
    }

    #[test]
    fn tiny_run_produces_records() {
        let r = simulate(&tiny()).unwrap();
        assert_eq!(r.groups.len(), 1);
        assert_eq!(r.records().len(), 4);
        for rec in r.records() {
            assert!(rec.kl_oracle >= -1e-9);
            assert!(rec.kl_ebic >= rec.kl_oracle);
            assert!((0.0..=1.0).contains(&rec.tpr) && (0.0..=1.0).contains(&rec.fpr));
        }
        assert!(r.groups[0].summary.kl_oracle_ratio_l1_over_l0.is_some());
    }

    #[test]
    fn shared_truth_versus_fresh() {
        let shared = simulate(&tiny()).unwrap();
        let o = &shared.groups[0].outcomes;
        assert_eq!(o[0].truth_seed, o[1].truth_seed);
        let fresh = simulate(&ExperimentConfig {
            fresh_truth: true,
            ..tiny()
        })
        .unwrap();
        let o = &fresh.groups[0].outcomes;
        assert_ne!(o[0].truth_seed, o[1].truth_seed);
    }

    #[test]
    fn roc_rows_and_auc() {
        let rows = run_roc(&tiny()).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(run_roc(&ExperimentConfig {
            alphas: vec![1.0, 0.5],
            ..tiny()
        })
        .is_err());
        // Perfect detector and chance line.
        assert!((partial_auc(&[(0.0, 1.0), (1.0, 1.0)], 0.05) - 1.0).abs() < 1e-12);
        assert!((partial_auc(&[(1.0, 1.0)], 1.0) - 0.5).abs() < 1e-12);
        // Flat hold past the last point.
        assert!((partial_auc(&[(0.02, 0.5)], 0.04) - (0.005 + 0.01) / 0.04).abs() < 1e-12);
    }

    #[test]
    fn amplitude_corners() {
        let truth = model_gen::gen_nsw(6, 8, 1).unwrap();
        assert!((shrinkage_ratio(&truth.omega, &truth) - 1.0).abs() < 1e-15);
        assert_eq!(shrinkage_ratio(&crate::SymMatrix::identity(6), &truth), 0.0);
    }
}
