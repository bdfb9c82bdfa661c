use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use l0cov::evaluation::{self, Scoring};
use l0cov::experiment::{self, ExperimentConfig};
use l0cov::matrix;
use l0cov::model_gen::{self, GraphKind};
use l0cov::{cd, Penalty, SolverConfig};

#[derive(Parser)]
#[command(name = "l0cov", version, about = "Sparse precision matrix estimation with l0 and l1 penalties")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a ground-truth precision matrix (and optionally a sample covariance).
    Gen(GenArgs),
    /// Solve one penalized problem for a sample covariance file.
    Solve(SolveArgs),
    /// Solve over a λ grid and write the path table.
    Sweep(SweepArgs),
    /// Run the replicated simulation protocol.
    Experiment(ExperimentArgs),
    /// Replicate-averaged ROC table for one sparsity level.
    Roc(ExperimentArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 100)]
    p: usize,
    #[arg(long, default_value = "nsw")]
    graph: GraphKind,
    /// Sparsity level; below 1 the truth is mixed with a dense one.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Off-diagonal nonzeros (both triangles) of the sparse endpoint; default 0.015·p².
    #[arg(long)]
    nnz: Option<usize>,
    /// Attachment count for the s.w. model; default matches the nnz budget.
    #[arg(long)]
    attach_m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also draw n samples and write their covariance to s.txt.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-8)]
    rel_tol: f64,
    #[arg(long, default_value_t = 500)]
    max_sweeps: usize,
    /// Visit only the current support after this many sweeps.
    #[arg(long)]
    active_set_after: Option<usize>,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            rel_tol: self.rel_tol,
            max_sweeps: self.max_sweeps,
            active_set_only_after: self.active_set_after,
            ..SolverConfig::default()
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Sample covariance in the matrix text format.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value = "l0")]
    solver: Penalty,
    #[command(flatten)]
    solver_args: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    input: PathBuf,
    /// Sample count behind the covariance (for EBIC).
    #[arg(long)]
    n: usize,
    /// True precision matrix, enabling KL and support metrics.
    #[arg(long)]
    omega: Option<PathBuf>,
    #[arg(long)]
    lambda_min: Option<f64>,
    #[arg(long)]
    lambda_max: Option<f64>,
    #[arg(long, default_value_t = evaluation::DEFAULT_GRID_POINTS)]
    grid_points: usize,
    #[arg(long, default_value = "both")]
    solver: String,
    #[arg(long, default_value_t = evaluation::DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    warm_start: bool,
    #[command(flatten)]
    solver_args: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// `key = value` settings; flags given here override them.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated sparsity levels.
    #[arg(long)]
    alpha: Option<String>,
    /// Replicates per sparsity level.
    #[arg(long = "M", alias = "m")]
    replicates: Option<usize>,
    #[arg(long)]
    lambda_min: Option<f64>,
    #[arg(long)]
    lambda_max: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    /// l0, l1 or both.
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    graph: Option<String>,
    /// Draw a new truth per replicate.
    #[arg(long)]
    fresh_truth: bool,
    #[arg(long)]
    warm_start: bool,
    /// 50 replicates and a 200-point grid.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            c.apply_config_text(&text)?;
        }
        if self.paper_scale {
            c = c.paper_scale();
        }
        let flags: [(&str, Option<String>); 13] = [
            ("p", self.p.map(|v| v.to_string())),
            ("n", self.n.map(|v| v.to_string())),
            ("alpha", self.alpha.clone()),
            ("M", self.replicates.map(|v| v.to_string())),
            ("lambda-min", self.lambda_min.map(|v| v.to_string())),
            ("lambda-max", self.lambda_max.map(|v| v.to_string())),
            ("grid-points", self.grid_points.map(|v| v.to_string())),
            ("solver", self.solver.clone()),
            ("gamma", self.gamma.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("jobs", self.jobs.map(|v| v.to_string())),
            ("graph", self.graph.clone()),
            ("out", self.out.as_ref().map(|v| v.display().to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                c.set(key, &v)?;
            }
        }
        c.fresh_truth |= self.fresh_truth;
        c.warm_start |= self.warm_start;
        c.validate()?;
        Ok(c)
    }
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let truth = if a.alpha < 1.0 {
        if a.nnz.is_some() || a.attach_m.is_some() {
            bail!("--nnz and --attach-m apply only at alpha = 1");
        }
        let cfg = ExperimentConfig {
            p: a.p,
            graph: a.graph,
            ..ExperimentConfig::default()
        };
        // Same endpoint construction as the experiment, rooted at --seed.
        experiment::truth_for(&cfg, a.alpha, a.seed)?
    } else {
        let nnz = a.nnz.unwrap_or_else(|| experiment::nnz_for_density(a.p, experiment::SPARSE_DENSITY));
        match a.graph {
            GraphKind::Nsw => model_gen::gen_nsw(a.p, nnz, a.seed)?,
            GraphKind::Sw => {
                let m = a.attach_m.unwrap_or_else(|| experiment::attach_for_nnz(a.p, nnz));
                model_gen::gen_sw(a.p, m, a.seed)?
            }
        }
    };
    fs::create_dir_all(&a.out)?;
    matrix::save_matrix(a.out.join("omega.txt"), &truth.omega)?;
    matrix::save_matrix(a.out.join("sigma.txt"), &truth.sigma)?;
    let support: String = truth.support.iter().map(|(i, j)| format!("{i} {j}\n")).collect();
    fs::write(a.out.join("support.txt"), support)?;
    let mut meta = serde_json::json!({
        "kind": truth.kind,
        "alpha": truth.alpha,
        "seed": truth.seed,
        "p": truth.dim(),
        "nnz": truth.nnz_offdiag(),
    });
    if let Some(n) = a.n {
        let data = model_gen::sample_gaussian(&truth.sigma, n, l0cov::seed::derive(a.seed, &[0]))?;
        matrix::save_matrix(a.out.join("s.txt"), &model_gen::sample_cov(&data))?;
        meta["n"] = n.into();
    }
    fs::write(a.out.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    println!("wrote {} (p = {}, nnz = {})", a.out.display(), truth.dim(), truth.nnz_offdiag());
    Ok(())
}

fn cmd_solve(a: &SolveArgs) -> Result<()> {
    let s = load(&a.input)?;
    let (x, report) = cd::solve(&s, a.lambda, a.solver, &a.solver_args.config())?;
    fs::create_dir_all(&a.out)?;
    matrix::save_matrix(a.out.join("estimate.txt"), &x)?;
    fs::write(a.out.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    println!(
        "{}: {} sweeps, converged = {}, objective = {}, nnz_offdiag = {}",
        a.solver, report.sweeps_used, report.converged, report.final_objective, report.nnz_offdiag
    );
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let s = load(&a.input)?;
    let truth = match &a.omega {
        Some(path) => Some(model_gen::GroundTruth::from_precision(load(path)?, GraphKind::Nsw, 1.0, 0)?),
        None => None,
    };
    let solvers = experiment::parse_solvers(&a.solver)?;
    let grid_spec = experiment::GridSpec {
        points: a.grid_points,
        lambda_min: a.lambda_min,
        lambda_max: a.lambda_max,
    };
    let scoring = Scoring {
        gamma: a.gamma,
        truth: truth.as_ref(),
        ..Scoring::new(a.n)
    };
    let config = a.solver_args.config();
    fs::create_dir_all(&a.out)?;
    for penalty in solvers {
        let grid = grid_spec.resolve(&s, penalty)?;
        let path = experiment::install_in_pool(a.jobs, || {
            if a.warm_start {
                evaluation::lambda_sweep_warm(&s, &grid, penalty, &config, scoring)
            } else {
                evaluation::lambda_sweep(&s, &grid, penalty, &config, scoring)
            }
        })??;
        let file = a.out.join(format!("path_{penalty}.csv"));
        evaluation::write_path_csv(fs::File::create(&file)?, &path)?;
        match evaluation::ebic_select(&path) {
            Some((lambda, _)) => println!("{penalty}: EBIC choice λ = {lambda}, wrote {}", file.display()),
            None => println!("{penalty}: no usable grid point, wrote {}", file.display()),
        }
    }
    Ok(())
}

fn cmd_experiment(a: &ExperimentArgs) -> Result<()> {
    let config = a.resolve()?;
    if config.out_dir.is_none() {
        bail!("--out is required");
    }
    let result = experiment::run_experiment(&config)?;
    for row in experiment::kl_ratio_table(&result) {
        println!(
            "alpha = {}: oracle KL l0 = {:.4}, l1 = {:.4}, ratio l1/l0 = {:.3}; EBIC ratio = {:.3}",
            row.alpha, row.l0_kl_oracle_mean, row.l1_kl_oracle_mean, row.oracle_ratio, row.ebic_ratio
        );
    }
    for g in &result.groups {
        if !g.failures.is_empty() {
            eprintln!("alpha = {}: {} replicate(s) failed", g.alpha, g.failures.len());
        }
    }
    Ok(())
}

fn cmd_roc(a: &ExperimentArgs) -> Result<()> {
    let config = a.resolve()?;
    if config.out_dir.is_none() {
        bail!("--out is required");
    }
    let rows = experiment::run_roc(&config)?;
    for solver in &config.solvers {
        let pts = experiment::roc_points(&rows, *solver);
        println!("{solver}: partial AUC on FPR <= 0.05 = {:.4}", experiment::partial_auc(&pts, 0.05));
    }
    Ok(())
}

fn load(path: &Path) -> Result<l0cov::SymMatrix> {
    matrix::load_matrix(path).with_context(|| format!("loading {}", path.display()))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Roc(a) => cmd_roc(a),
    }
}
