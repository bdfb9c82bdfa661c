//! Dense symmetric matrices, Cholesky factorization, and the closed-form
//! determinant / inverse perturbation identities that drive the coordinate
//! descent solvers.
//!
//! All indices in this module are 0-based. For a symmetric positive definite
//! `X` with inverse `Y`, perturbing one diagonal entry by `δ` or one symmetric
//! off-diagonal pair by `δ` changes the determinant by the factors
//!
//! ```text
//! det(X + δ e_i e_iᵀ)              = det(X) · (1 + δ y_ii)
//! det(X + δ (e_i e_jᵀ + e_j e_iᵀ)) = det(X) · (1 + 2 δ y_ij − Δ_ij δ²)
//! Δ_ij = y_ii y_jj − y_ij²
//! ```
//!
//! and the inverse changes by a rank-one (diagonal) or rank-two (off-diagonal)
//! Sherman–Morrison–Woodbury correction, costing `O(p²)` instead of `O(p³)`.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Denominators below this magnitude are treated as a singular update.
pub const DENOM_FLOOR: f64 = 1e-12;

/// Absolute asymmetry tolerated when loading a matrix from text.
pub const LOAD_SYMMETRY_TOL: f64 = 1e-9;

/// Dense `p × p` symmetric matrix stored row-major with both triangles.
///
/// Every mutating path writes `(i, j)` and `(j, i)` from a single computed
/// value, so the two triangles are always bit-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    p: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(p: usize) -> Self {
        assert!(p >= 1, "dimension must be positive");
        Self {
            p,
            data: vec![0.0; p * p],
        }
    }

    pub fn identity(p: usize) -> Self {
        Self::from_diag(&vec![1.0; p])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * m.p + i] = d;
        }
        m
    }

    /// Builds a matrix from a function evaluated on the upper triangle only
    /// (`i <= j`); the lower triangle is mirrored.
    pub fn from_upper_fn(p: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(p);
        for i in 0..p {
            for j in i..p {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds a matrix from full rows, checking symmetry to within `tol`
    /// (absolute) and then symmetrizing exactly by averaging the triangles.
    pub fn from_rows(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let p = rows.len();
        if p == 0 {
            return Err(Error::Parse("matrix must have at least one row".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::Parse(format!(
                    "row {i} has {} entries, expected {p}",
                    row.len()
                )));
            }
        }
        for i in 0..p {
            for j in (i + 1)..p {
                let (a, b) = (rows[i][j], rows[j][i]);
                if !((a - b).abs() <= tol) {
                    return Err(Error::BadCovariance(format!(
                        "asymmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(Self::from_upper_fn(p, |i, j| {
            if i == j {
                rows[i][i]
            } else {
                0.5 * (rows[i][j] + rows[j][i])
            }
        }))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.p + j]
    }

    /// Writes `v` to both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.p + j] = v;
        self.data[j * self.p + i] = v;
    }

    /// Row `i`, which equals column `i` by symmetry.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.p).map(|i| self.get(i, i)).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        self.count_offdiag_nonzeros() == 0
    }

    /// `tr(A·B)`, which for symmetric operands is the entrywise inner product.
    pub fn trace_product(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.p, other.p, "dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn frobenius_distance(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.p, other.p, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Number of exactly nonzero entries over the whole matrix.
    pub fn count_nonzeros(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    /// Number of exactly nonzero pairs `(i, j)` with `i < j`.
    pub fn count_offdiag_nonzeros(&self) -> usize {
        let mut k = 0;
        for i in 0..self.p {
            for j in (i + 1)..self.p {
                if self.get(i, j) != 0.0 {
                    k += 1;
                }
            }
        }
        k
    }

    /// General product `self · other` as a row-major `p × p` buffer. The
    /// product of two symmetric matrices is not symmetric in general.
    pub fn mul_dense(&self, other: &SymMatrix) -> Vec<f64> {
        assert_eq!(self.p, other.p, "dimension mismatch");
        let p = self.p;
        let mut out = vec![0.0; p * p];
        for i in 0..p {
            let a = self.row(i);
            for (k, &aik) in a.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let b = other.row(k);
                let o = &mut out[i * p..(i + 1) * p];
                for (oj, bj) in o.iter_mut().zip(b) {
                    *oj += aik * bj;
                }
            }
        }
        out
    }
}

/// `‖A·B − I‖_F`.
pub fn identity_residual(a: &SymMatrix, b: &SymMatrix) -> f64 {
    let p = a.dim();
    let prod = a.mul_dense(b);
    let mut acc = 0.0;
    for i in 0..p {
        for j in 0..p {
            let target = if i == j { 1.0 } else { 0.0 };
            let d = prod[i * p + j] - target;
            acc += d * d;
        }
    }
    acc.sqrt()
}

/// Lower-triangular Cholesky factor with its log-determinant.
#[derive(Debug, Clone)]
pub struct CholSummary {
    p: usize,
    factor: Vec<f64>,
    /// `log det M = 2 Σ log L_ii`.
    pub logdet: f64,
}

impl CholSummary {
    pub fn dim(&self) -> usize {
        self.p
    }

    /// Entry `(i, j)` of the lower factor; zero above the diagonal.
    pub fn factor(&self, i: usize, j: usize) -> f64 {
        self.factor[i * self.p + j]
    }

    /// `L · z` for a vector `z`.
    pub fn mul_lower(&self, z: &[f64], out: &mut [f64]) {
        let p = self.p;
        for i in 0..p {
            let row = &self.factor[i * p..i * p + i + 1];
            out[i] = row.iter().zip(z).map(|(l, v)| l * v).sum();
        }
    }

    /// Inverse of the factored matrix, `M⁻¹ = L⁻ᵀ L⁻¹`.
    pub fn inverse(&self) -> SymMatrix {
        let p = self.p;
        // W = L⁻¹, lower triangular, by forward substitution per column.
        let mut w = vec![0.0; p * p];
        for c in 0..p {
            w[c * p + c] = 1.0 / self.factor[c * p + c];
            for r in (c + 1)..p {
                let mut acc = 0.0;
                for k in c..r {
                    acc += self.factor[r * p + k] * w[k * p + c];
                }
                w[r * p + c] = -acc / self.factor[r * p + r];
            }
        }
        SymMatrix::from_upper_fn(p, |a, b| {
            // a <= b; W is lower so rows k >= b contribute.
            (b..p).map(|k| w[k * p + a] * w[k * p + b]).sum()
        })
    }
}

/// Cholesky factorization `M = L Lᵀ`. Fails with [`Error::NotPd`] on the
/// first pivot that is not strictly positive (or not finite).
pub fn cholesky(m: &SymMatrix) -> Result<CholSummary> {
    let p = m.dim();
    let mut l = vec![0.0; p * p];
    let mut logdet = 0.0;
    for j in 0..p {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= l[j * p + k] * l[j * p + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPd { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        l[j * p + j] = ljj;
        logdet += ljj.ln();
        for i in (j + 1)..p {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            l[i * p + j] = s / ljj;
        }
    }
    Ok(CholSummary {
        p,
        factor: l,
        logdet: 2.0 * logdet,
    })
}

/// `log det M` via Cholesky.
pub fn logdet(m: &SymMatrix) -> Result<f64> {
    cholesky(m).map(|c| c.logdet)
}

/// Inverse of a positive definite matrix via Cholesky.
pub fn inverse_pd(m: &SymMatrix) -> Result<SymMatrix> {
    cholesky(m).map(|c| c.inverse())
}

/// `det(X + δ e_i e_iᵀ) / det(X) = 1 + δ y_ii`.
#[inline]
pub fn det_ratio_diag(y: &SymMatrix, i: usize, delta: f64) -> f64 {
    1.0 + delta * y.get(i, i)
}

/// `Δ_ij(Y) = y_ii y_jj − y_ij²`; strictly positive whenever `Y` is PD.
#[inline]
pub fn schur_delta(y: &SymMatrix, i: usize, j: usize) -> f64 {
    debug_assert_ne!(i, j);
    let yij = y.get(i, j);
    y.get(i, i) * y.get(j, j) - yij * yij
}

/// `det(X + δ(e_i e_jᵀ + e_j e_iᵀ)) / det(X) = −Δ_ij δ² + 2 y_ij δ + 1`.
#[inline]
pub fn det_ratio_offdiag(y: &SymMatrix, i: usize, j: usize, delta: f64) -> f64 {
    -schur_delta(y, i, j) * delta * delta + 2.0 * y.get(i, j) * delta + 1.0
}

/// In-place rank-one update of `Y = X⁻¹` for `X ← X + δ e_i e_iᵀ`.
///
/// Returns the determinant ratio `1 + δ y_ii`. `Y` is left untouched on error.
pub fn smw_update_diag_in_place(y: &mut SymMatrix, i: usize, delta: f64, floor: f64) -> Result<f64> {
    let ratio = det_ratio_diag(y, i, delta);
    if !(ratio.abs() >= floor) {
        return Err(Error::SingularUpdate {
            denominator: ratio,
            floor,
        });
    }
    if delta == 0.0 {
        return Ok(ratio);
    }
    let p = y.dim();
    let col: Vec<f64> = y.row(i).to_vec();
    let scale = delta / ratio;
    for (row, &ca) in y.data.chunks_exact_mut(p).zip(&col) {
        if ca == 0.0 {
            continue;
        }
        let k = scale * ca;
        for (v, &cb) in row.iter_mut().zip(&col) {
            *v -= k * cb;
        }
    }
    Ok(ratio)
}

/// In-place rank-two update of `Y = X⁻¹` for
/// `X ← X + δ (e_i e_jᵀ + e_j e_iᵀ)`, using the 2×2 capacitance form.
///
/// Returns the determinant ratio `−Δ_ij δ² + 2 y_ij δ + 1`. `Y` is left
/// untouched on error.
pub fn smw_update_offdiag_in_place(
    y: &mut SymMatrix,
    i: usize,
    j: usize,
    delta: f64,
    floor: f64,
) -> Result<f64> {
    assert_ne!(i, j, "off-diagonal update needs i != j");
    let ratio = det_ratio_offdiag(y, i, j, delta);
    if !(ratio.abs() >= floor) {
        return Err(Error::SingularUpdate {
            denominator: ratio,
            floor,
        });
    }
    if delta == 0.0 {
        return Ok(ratio);
    }
    let p = y.dim();
    let ci: Vec<f64> = y.row(i).to_vec();
    let cj: Vec<f64> = y.row(j).to_vec();
    let (yii, yjj, yij) = (ci[i], cj[j], ci[j]);
    let s = delta / ratio;
    let c_mix = 1.0 + delta * yij;
    let c_ii = delta * yjj;
    let c_jj = delta * yii;
    // corr_ab = a_a ci_b + b_a cj_b with per-row coefficients; symmetric up
    // to rounding (the periodic refresh restores exact symmetry).
    for ((row, &ia), &ja) in y.data.chunks_exact_mut(p).zip(&ci).zip(&cj) {
        if ia == 0.0 && ja == 0.0 {
            continue;
        }
        let ka = s * (c_mix * ja - c_ii * ia);
        let kb = s * (c_mix * ia - c_jj * ja);
        for ((v, &ib), &jb) in row.iter_mut().zip(&ci).zip(&cj) {
            *v -= ka * ib + kb * jb;
        }
    }
    Ok(ratio)
}

/// `(X + δ e_i e_iᵀ)⁻¹` from `Y = X⁻¹`.
pub fn smw_update_diag(y: &SymMatrix, i: usize, delta: f64) -> Result<SymMatrix> {
    let mut out = y.clone();
    smw_update_diag_in_place(&mut out, i, delta, DENOM_FLOOR)?;
    Ok(out)
}

/// `(X + δ (e_i e_jᵀ + e_j e_iᵀ))⁻¹` from `Y = X⁻¹`.
pub fn smw_update_offdiag(y: &SymMatrix, i: usize, j: usize, delta: f64) -> Result<SymMatrix> {
    let mut out = y.clone();
    smw_update_offdiag_in_place(&mut out, i, j, delta, DENOM_FLOOR)?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Text format: first line `p`, then p rows of p whitespace-separated decimals.
// ---------------------------------------------------------------------------

pub fn read_matrix<R: BufRead>(reader: R) -> Result<SymMatrix> {
    let mut lines = reader
        .lines()
        .map(|l| l.map_err(Error::from))
        .filter(|l| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))??;
    let p: usize = header
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad dimension line {header:?}")))?;
    if p == 0 {
        return Err(Error::Parse("dimension must be positive".into()));
    }
    let mut rows = Vec::with_capacity(p);
    for r in 0..p {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("expected {p} rows, found {r}")))??;
        let row = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad value {t:?} in row {r}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if let Some(extra) = lines.next() {
        let extra = extra?;
        return Err(Error::Parse(format!("trailing content after {p} rows: {extra:?}")));
    }
    SymMatrix::from_rows(&rows, LOAD_SYMMETRY_TOL)
}

pub fn write_matrix<W: Write>(mut w: W, m: &SymMatrix) -> Result<()> {
    writeln!(w, "{}", m.dim())?;
    for i in 0..m.dim() {
        let line = m
            .row(i)
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<SymMatrix> {
    let f = std::fs::File::open(path)?;
    read_matrix(std::io::BufReader::new(f))
}

pub fn save_matrix(path: impl AsRef<Path>, m: &SymMatrix) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_matrix(&mut w, m)?;
    w.flush()?;
    Ok(())
}
