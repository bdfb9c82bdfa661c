//! Synthetic ground truth: random-support (n.s.w.) and preferential-attachment
//! (s.w.) precision matrices, sparsity interpolation between two truths,
//! zero-mean Gaussian sampling and the sample covariance.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{self, SymMatrix};
use crate::seed;

/// Added to the row-wise absolute sum to make the diagonal strictly dominant.
pub const PD_MARGIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Nsw,
    Sw,
}

impl GraphKind {
    pub fn name(self) -> &'static str {
        match self {
            GraphKind::Nsw => "nsw",
            GraphKind::Sw => "sw",
        }
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GraphKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nsw" => Ok(GraphKind::Nsw),
            "sw" => Ok(GraphKind::Sw),
            other => Err(Error::BadParams(format!("unknown graph kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub omega: SymMatrix,
    pub sigma: SymMatrix,
    /// Off-diagonal nonzero pairs `(i, j)`, `i < j`, sorted.
    pub support: Vec<(usize, usize)>,
    pub kind: GraphKind,
    pub alpha: f64,
    pub seed: u64,
}

impl GroundTruth {
    pub fn dim(&self) -> usize {
        self.omega.dim()
    }

    /// Nonzero off-diagonal entries counted in both triangles.
    pub fn nnz_offdiag(&self) -> usize {
        2 * self.support.len()
    }

    /// Builds a truth from off-diagonal values; the diagonal is repaired to
    /// row-wise absolute sum plus [`PD_MARGIN`].
    pub fn from_offdiag(
        p: usize,
        entries: &[(usize, usize, f64)],
        kind: GraphKind,
        alpha: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut omega = SymMatrix::zeros(p);
        for &(i, j, v) in entries {
            if i == j || i >= p || j >= p {
                return Err(Error::BadParams(format!("bad off-diagonal index ({i}, {j})")));
            }
            omega.set(i, j, v);
        }
        repair_diagonal(&mut omega);
        let sigma = matrix::inverse_pd(&omega)?;
        let support = support_of(&omega);
        Ok(GroundTruth {
            omega,
            sigma,
            support,
            kind,
            alpha,
            seed,
        })
    }

    /// Wraps an existing precision matrix; the support is its exact
    /// off-diagonal nonzero pattern.
    pub fn from_precision(omega: SymMatrix, kind: GraphKind, alpha: f64, seed: u64) -> Result<Self> {
        let sigma = matrix::inverse_pd(&omega)?;
        let support = support_of(&omega);
        Ok(GroundTruth {
            omega,
            sigma,
            support,
            kind,
            alpha,
            seed,
        })
    }
}

fn repair_diagonal(omega: &mut SymMatrix) {
    let p = omega.dim();
    for i in 0..p {
        let off: f64 = (0..p).filter(|&j| j != i).map(|j| omega.get(i, j).abs()).sum();
        omega.set(i, i, off + PD_MARGIN);
    }
}

/// Exact off-diagonal nonzero pattern, `i < j`, row-major.
pub fn support_of(m: &SymMatrix) -> Vec<(usize, usize)> {
    let p = m.dim();
    let mut out = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            if m.get(i, j) != 0.0 {
                out.push((i, j));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    /// Row-major `n × p`.
    pub samples: Vec<f64>,
    pub n: usize,
    pub p: usize,
    pub truth_seed: Option<u64>,
    pub data_seed: u64,
}

impl DataSet {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::BadParams("data set needs at least one row".into()));
        }
        let p = rows[0].len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::BadParams("ragged data rows".into()));
        }
        Ok(DataSet {
            samples: rows.concat(),
            n,
            p,
            truth_seed: None,
            data_seed: 0,
        })
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.samples[k * self.p..(k + 1) * self.p]
    }
}

fn nonzero_normal<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let v: f64 = rng.sample(StandardNormal);
        if v != 0.0 {
            return v;
        }
    }
}

/// `pairs` distinct uniformly random pairs `i < j`, sorted.
pub fn random_edges<R: Rng>(p: usize, pairs: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let total = p * p.saturating_sub(1) / 2;
    let mut picks = index::sample(rng, total, pairs).into_vec();
    picks.sort_unstable();
    picks.into_iter().map(|k| unrank_pair(p, k)).collect()
}

/// Inverse of the row-major enumeration of the strict upper triangle.
fn unrank_pair(p: usize, mut k: usize) -> (usize, usize) {
    let mut i = 0;
    while k >= p - 1 - i {
        k -= p - 1 - i;
        i += 1;
    }
    (i, i + 1 + k)
}

/// Barabási–Albert edges: a clique on the first `m` nodes, then each new node
/// links to `m` distinct earlier nodes drawn proportionally to degree
/// (uniformly while every degree is zero). Sorted, `i < j`.
pub fn preferential_edges<R: Rng>(p: usize, m: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(m * (m.saturating_sub(1)) / 2 + (p - m) * m);
    // Each endpoint appears once per incident edge, so a uniform pick from this
    // list is a degree-proportional pick.
    let mut endpoints: Vec<usize> = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            edges.push((i, j));
            endpoints.push(i);
            endpoints.push(j);
        }
    }
    let mut chosen = Vec::with_capacity(m);
    for t in m..p {
        chosen.clear();
        while chosen.len() < m {
            let v = if endpoints.is_empty() {
                rng.random_range(0..t)
            } else {
                endpoints[rng.random_range(0..endpoints.len())]
            };
            if !chosen.contains(&v) {
                chosen.push(v);
            }
        }
        for &v in &chosen {
            edges.push((v, t));
            endpoints.push(v);
            endpoints.push(t);
        }
    }
    edges.sort_unstable();
    edges
}

fn with_normal_values<R: Rng>(edges: &[(usize, usize)], rng: &mut R) -> Vec<(usize, usize, f64)> {
    edges.iter().map(|&(i, j)| (i, j, nonzero_normal(rng))).collect()
}

/// Uniformly random support with `nnz_target` off-diagonal nonzeros (both
/// triangles) and standard normal values.
pub fn gen_nsw(p: usize, nnz_target: usize, seed: u64) -> Result<GroundTruth> {
    if p == 0 {
        return Err(Error::BadParams("p must be positive".into()));
    }
    if nnz_target % 2 != 0 || nnz_target > p * (p - 1) {
        return Err(Error::BadParams(format!(
            "nnz_target must be even and at most p(p-1) = {}, got {nnz_target}",
            p * (p - 1)
        )));
    }
    let mut rng = seed::rng(seed);
    let edges = random_edges(p, nnz_target / 2, &mut rng);
    let entries = with_normal_values(&edges, &mut rng);
    GroundTruth::from_offdiag(p, &entries, GraphKind::Nsw, 1.0, seed)
}

/// Preferential-attachment support with standard normal values.
pub fn gen_sw(p: usize, attach_m: usize, seed: u64) -> Result<GroundTruth> {
    if attach_m < 1 || attach_m >= p {
        return Err(Error::BadParams(format!("need 1 <= attach_m < p, got attach_m = {attach_m}, p = {p}")));
    }
    let mut rng = seed::rng(seed);
    let edges = preferential_edges(p, attach_m, &mut rng);
    let entries = with_normal_values(&edges, &mut rng);
    GroundTruth::from_offdiag(p, &entries, GraphKind::Sw, 1.0, seed)
}

/// Stochastic combination `Ω(α)` of `Ω(1)` and `Ω(0)`.
pub fn interpolate(truth1: &GroundTruth, truth0: &GroundTruth, alpha: f64, seed: u64) -> Result<GroundTruth> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::BadParams(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let p = truth1.dim();
    if truth0.dim() != p {
        return Err(Error::BadParams("interpolated truths differ in dimension".into()));
    }
    let (o1, o0) = (&truth1.omega, &truth0.omega);
    let mut rng = seed::rng(seed);
    let mut entries = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            let (w1, w0) = (o1.get(i, j), o0.get(i, j));
            let pij = alpha * f64::from(u8::from(w1 != 0.0)) + (1.0 - alpha) * f64::from(u8::from(w0 != 0.0));
            // One uniform per pair keeps the stream aligned across α.
            let u: f64 = rng.random();
            if u < pij {
                let v = alpha * w1 + (1.0 - alpha) * w0;
                if v != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
    }
    GroundTruth::from_offdiag(p, &entries, truth1.kind, alpha, seed)
}

/// Expected support size of `interpolate` at `alpha`.
pub fn expected_interpolated_support(truth1: &GroundTruth, truth0: &GroundTruth, alpha: f64) -> f64 {
    let p = truth1.dim();
    let mut total = 0.0;
    for i in 0..p {
        for j in (i + 1)..p {
            if truth1.omega.get(i, j) != 0.0 {
                total += alpha;
            }
            if truth0.omega.get(i, j) != 0.0 {
                total += 1.0 - alpha;
            }
        }
    }
    total
}

/// `n` i.i.d. rows `L z`, `Σ = L Lᵀ`, `z` standard normal.
pub fn sample_gaussian(sigma: &SymMatrix, n: usize, seed: u64) -> Result<DataSet> {
    if n == 0 {
        return Err(Error::BadParams("n must be at least 1".into()));
    }
    let chol = matrix::cholesky(sigma)?;
    let p = sigma.dim();
    let mut rng = seed::rng(seed);
    let mut samples = vec![0.0; n * p];
    let mut z = vec![0.0; p];
    for row in samples.chunks_exact_mut(p) {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        chol.mul_lower(&z, row);
    }
    Ok(DataSet {
        samples,
        n,
        p,
        truth_seed: None,
        data_seed: seed,
    })
}

/// `S = (1/n) Σ_k x_k x_kᵀ` (known zero mean, no centering).
pub fn sample_cov(data: &DataSet) -> SymMatrix {
    let p = data.p;
    let mut acc = vec![0.0; p * p];
    for k in 0..data.n {
        let x = data.row(k);
        for i in 0..p {
            let xi = x[i];
            for j in i..p {
                acc[i * p + j] += xi * x[j];
            }
        }
    }
    let inv_n = 1.0 / data.n as f64;
    SymMatrix::from_upper_fn(p, |i, j| acc[i * p + j] * inv_n)
}

/// Per-node count of off-diagonal nonzeros.
pub fn degree_histogram(truth: &GroundTruth) -> Vec<usize> {
    degrees(truth.dim(), &truth.support)
}

pub fn degrees(p: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut d = vec![0; p];
    for &(i, j) in edges {
        d[i] += 1;
        d[j] += 1;
    }
    d
}
