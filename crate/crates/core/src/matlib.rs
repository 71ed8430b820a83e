//! Dense row-major real matrices and the symmetric eigen-solver behind every
//! definiteness check in the crate.
//!
//! Sizes here stay in the low hundreds (the largest form is the network
//! dissipativity matrix), so a straightforward cyclic Jacobi solver is used
//! instead of pulling in a LAPACK binding.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Default absolute tolerance on eigenvalues, and the base for entry-wise
/// equality tolerances (scaled by `max(1, ‖·‖_max)`).
pub const DEFAULT_TOL: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_OFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatError {
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NonSquare { rows: usize, cols: usize },
    #[error("asymmetry {asym:e} exceeds tolerance {tol:e}")]
    AsymmetryExceedsTol { asym: f64, tol: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

/// Dense real matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MatError> {
        if data.len() != rows * cols {
            return Err(MatError::DimensionMismatch(format!(
                "{} entries given for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(MatError::NonFinite {
                row: k / cols.max(1),
                col: k % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatError> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(MatError::DimensionMismatch(format!(
                "row {bad} has {} entries, expected {cols}",
                rows[bad].len()
            )));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Column vector.
    pub fn column(v: &[f64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// Row vector.
    pub fn row(v: &[f64]) -> Self {
        Self {
            rows: 1,
            cols: v.len(),
            data: v.to_vec(),
        }
    }

    pub fn scalar(v: f64) -> Self {
        Self::column(&[v])
    }

    pub fn filled(rows: usize, cols: usize, v: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![v; rows * cols],
        }
    }

    pub fn diag(d: &[f64]) -> Self {
        Self::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    /// Block-diagonal assembly; zero-sized blocks are allowed.
    pub fn block_diag<'a>(blocks: impl IntoIterator<Item = &'a Matrix>) -> Self {
        let blocks: Vec<&Matrix> = blocks.into_iter().collect();
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            out.set_block(r0, c0, b);
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    /// Assembles a matrix from a grid of blocks; block rows must agree in
    /// height and block columns in width.
    pub fn from_blocks(grid: &[Vec<&Matrix>]) -> Result<Self, MatError> {
        let heights: Vec<usize> = grid.iter().map(|r| r.first().map_or(0, |b| b.rows)).collect();
        let widths: Vec<usize> = grid
            .first()
            .map(|r| r.iter().map(|b| b.cols).collect())
            .unwrap_or_default();
        for (bi, row) in grid.iter().enumerate() {
            if row.len() != widths.len() {
                return Err(MatError::DimensionMismatch(format!(
                    "block row {bi} has {} blocks, expected {}",
                    row.len(),
                    widths.len()
                )));
            }
            for (bj, b) in row.iter().enumerate() {
                if b.rows != heights[bi] || b.cols != widths[bj] {
                    return Err(MatError::DimensionMismatch(format!(
                        "block ({bi}, {bj}) is {}x{}, expected {}x{}",
                        b.rows, b.cols, heights[bi], widths[bj]
                    )));
                }
            }
        }
        let mut out = Self::zeros(heights.iter().sum(), widths.iter().sum());
        let mut r0 = 0;
        for (bi, row) in grid.iter().enumerate() {
            let mut c0 = 0;
            for (bj, b) in row.iter().enumerate() {
                out.set_block(r0, c0, b);
                c0 += widths[bj];
            }
            r0 += heights[bi];
        }
        Ok(out)
    }

    pub fn vstack(parts: &[&Matrix]) -> Result<Self, MatError> {
        let grid: Vec<Vec<&Matrix>> = parts.iter().map(|p| vec![*p]).collect();
        Self::from_blocks(&grid)
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Matrix) {
        assert!(
            r0 + b.rows <= self.rows && c0 + b.cols <= self.cols,
            "block does not fit"
        );
        for i in 0..b.rows {
            let dst = (r0 + i) * self.cols + c0;
            self.data[dst..dst + b.cols].copy_from_slice(&b.data[i * b.cols..(i + 1) * b.cols]);
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row_slice(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row_slice(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, k: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * k).collect(),
        }
    }

    pub fn try_mul(&self, rhs: &Matrix) -> Result<Matrix, MatError> {
        if self.cols != rhs.rows {
            return Err(MatError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    fn try_zip(&self, rhs: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix, MatError> {
        if self.shape() != rhs.shape() {
            return Err(MatError::DimensionMismatch(format!(
                "shapes {}x{} and {}x{} differ",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    pub fn try_add(&self, rhs: &Matrix) -> Result<Matrix, MatError> {
        self.try_zip(rhs, |a, b| a + b)
    }

    pub fn try_sub(&self, rhs: &Matrix) -> Result<Matrix, MatError> {
        self.try_zip(rhs, |a, b| a - b)
    }

    /// `self · v` for a plain vector.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>, MatError> {
        if v.len() != self.cols {
            return Err(MatError::DimensionMismatch(format!(
                "cannot multiply {}x{} by a vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row_slice(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    /// Largest entry of `|S − Sᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// `(S + Sᵀ) / 2`.
    pub fn symmetrized(&self) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    /// Quadratic form `vᵀ S v`.
    pub fn quad_form(&self, v: &[f64]) -> Result<f64, MatError> {
        let sv = self.mul_vec(v)?;
        Ok(sv.iter().zip(v).map(|(a, b)| a * b).sum())
    }

    /// Solves `self · X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Matrix) -> Result<Matrix, MatError> {
        if !self.is_square() {
            return Err(MatError::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if rhs.rows != self.rows {
            return Err(MatError::DimensionMismatch(format!(
                "right-hand side has {} rows, expected {}",
                rhs.rows, self.rows
            )));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut b = rhs.clone();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let piv = (k..n)
                .max_by(|&x, &y| a[(x, k)].abs().total_cmp(&a[(y, k)].abs()))
                .unwrap();
            if a[(piv, k)].abs() <= 1e-13 * scale {
                return Err(MatError::Singular);
            }
            if piv != k {
                a.swap_rows(piv, k);
                b.swap_rows(piv, k);
            }
            for i in (k + 1)..n {
                let f = a[(i, k)] / a[(k, k)];
                if f == 0.0 {
                    continue;
                }
                for j in k..n {
                    a[(i, j)] -= f * a[(k, j)];
                }
                for j in 0..b.cols {
                    b[(i, j)] -= f * b[(k, j)];
                }
            }
        }
        for j in 0..b.cols {
            for i in (0..n).rev() {
                let mut s = b[(i, j)];
                for k in (i + 1)..n {
                    s -= a[(i, k)] * b[(k, j)];
                }
                b[(i, j)] = s / a[(i, i)];
            }
        }
        Ok(b)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

/// Entry-wise equality tolerance: `tol · max(1, ‖a‖_max, ‖b‖_max)`.
pub fn eq_threshold(tol: f64, a: &Matrix, b: &Matrix) -> f64 {
    tol * 1f64.max(a.max_abs()).max(b.max_abs())
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.try_mul(rhs).expect("matrix product")
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        self.try_add(rhs).expect("matrix sum")
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        self.try_sub(rhs).expect("matrix difference")
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            let row = self.row_slice(i);
            let shown: Vec<String> = row.iter().take(8).map(|v| format!("{v:>10.4e}")).collect();
            let more = if self.cols > 8 { " …" } else { "" };
            writeln!(f, "  {}{more}", shown.join(" "))?;
        }
        if self.rows > 8 {
            writeln!(f, "  …")?;
        }
        write!(f, "]")
    }
}

// Matrices travel as nested row arrays in JSON documents.
impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Matrix::from_rows(&rows).map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigBounds {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Eigen-decomposition of a symmetric matrix: `S = V diag(values) Vᵀ`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: Matrix,
}

fn checked_symmetric(s: &Matrix, tol: f64) -> Result<Matrix, MatError> {
    if !s.is_square() {
        return Err(MatError::NonSquare {
            rows: s.rows,
            cols: s.cols,
        });
    }
    let asym = s.asymmetry();
    let allowed = tol * 1f64.max(s.max_abs());
    if asym > allowed {
        return Err(MatError::AsymmetryExceedsTol { asym, tol: allowed });
    }
    Ok(s.symmetrized())
}

/// Cyclic Jacobi rotations on a symmetric matrix. Returns the diagonalised
/// matrix and, when requested, the accumulated rotations.
fn jacobi(mut a: Matrix, want_vectors: bool) -> Result<(Vec<f64>, Option<Matrix>), MatError> {
    let n = a.rows;
    let mut v = want_vectors.then(|| Matrix::identity(n));
    let target = JACOBI_REL_OFF * a.frobenius();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= target {
            let vals = (0..n).map(|i| a[(i, i)]).collect();
            return Ok((vals, v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                a[(p, p)] -= t * apq;
                a[(q, q)] += t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    let np = c * arp - s * arq;
                    let nq = s * arp + c * arq;
                    a[(r, p)] = np;
                    a[(p, r)] = np;
                    a[(r, q)] = nq;
                    a[(q, r)] = nq;
                }
                if let Some(v) = v.as_mut() {
                    for r in 0..n {
                        let vrp = v[(r, p)];
                        let vrq = v[(r, q)];
                        v[(r, p)] = c * vrp - s * vrq;
                        v[(r, q)] = s * vrp + c * vrq;
                    }
                }
            }
        }
    }
    Err(MatError::NoConvergence {
        sweeps: JACOBI_MAX_SWEEPS,
    })
}

/// Eigenvalues (ascending) of the symmetrised input.
pub fn sym_eigenvalues(s: &Matrix, tol: f64) -> Result<Vec<f64>, MatError> {
    let a = checked_symmetric(s, tol)?;
    let (mut vals, _) = jacobi(a, false)?;
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

pub fn sym_eigen(s: &Matrix, tol: f64) -> Result<SymEigen, MatError> {
    let a = checked_symmetric(s, tol)?;
    let n = a.rows;
    let (vals, vecs) = jacobi(a, true)?;
    let vecs = vecs.expect("vectors requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    Ok(SymEigen {
        values: order.iter().map(|&k| vals[k]).collect(),
        vectors: Matrix::from_fn(n, n, |i, j| vecs[(i, order[j])]),
    })
}

/// Smallest and largest eigenvalue of `(S + Sᵀ)/2`.
pub fn sym_eig_bounds(s: &Matrix, tol: f64) -> Result<EigBounds, MatError> {
    let vals = sym_eigenvalues(s, tol)?;
    Ok(match (vals.first(), vals.last()) {
        (Some(&lo), Some(&hi)) => EigBounds {
            lambda_min: lo,
            lambda_max: hi,
        },
        _ => EigBounds {
            lambda_min: 0.0,
            lambda_max: 0.0,
        },
    })
}

/// `λ_max((S+Sᵀ)/2) ≤ tol`.
pub fn is_nsd(s: &Matrix, tol: f64) -> Result<bool, MatError> {
    Ok(sym_eig_bounds(s, tol)?.lambda_max <= tol)
}

/// `λ_min((S+Sᵀ)/2) ≥ −tol`.
pub fn is_psd(s: &Matrix, tol: f64) -> Result<bool, MatError> {
    Ok(sym_eig_bounds(s, tol)?.lambda_min >= -tol)
}

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub x: Matrix,
    /// `‖A X − B‖_F`.
    pub residual: f64,
    /// Set when `AᵀA` is singular; `x` is then the minimum-norm minimiser.
    pub rank_deficient: bool,
}

/// Minimises `‖A X − B‖_F` through the pseudo-inverse of `AᵀA`.
pub fn least_squares(a: &Matrix, b: &Matrix) -> Result<LeastSquares, MatError> {
    if a.rows != b.rows {
        return Err(MatError::DimensionMismatch(format!(
            "A has {} rows but B has {}",
            a.rows, b.rows
        )));
    }
    let at = a.transpose();
    let gram = &at * a;
    let rhs = &at * b;
    let eig = sym_eigen(&gram, DEFAULT_TOL)?;
    let top = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let cutoff = 1e-12 * top.max(f64::MIN_POSITIVE);
    let mut rank_deficient = false;
    let n = a.cols;
    // X = V Λ⁺ Vᵀ Aᵀ B
    let vt_rhs = &eig.vectors.transpose() * &rhs;
    let mut scaled = vt_rhs;
    for k in 0..n {
        let lam = eig.values[k];
        let inv = if lam > cutoff {
            1.0 / lam
        } else {
            rank_deficient = true;
            0.0
        };
        for j in 0..scaled.cols {
            scaled[(k, j)] *= inv;
        }
    }
    let x = &eig.vectors * &scaled;
    let residual = (&(a * &x) - b).frobenius();
    Ok(LeastSquares {
        x,
        residual,
        rank_deficient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn det(m: &Matrix) -> f64 {
        // Gaussian elimination with partial pivoting, test-only.
        let n = m.rows();
        let mut a = m.clone();
        let mut d = 1.0;
        for k in 0..n {
            let p = (k..n).max_by(|&x, &y| a[(x, k)].abs().total_cmp(&a[(y, k)].abs())).unwrap();
            if a[(p, k)] == 0.0 {
                return 0.0;
            }
            if p != k {
                a.swap_rows(p, k);
                d = -d;
            }
            d *= a[(k, k)];
            for i in (k + 1)..n {
                let f = a[(i, k)] / a[(k, k)];
                for j in k..n {
                    a[(i, j)] -= f * a[(k, j)];
                }
            }
        }
        d
    }

    fn char_poly_roots_by_bisection(s: &Matrix) -> Vec<f64> {
        let n = s.rows();
        let radius = (0..n)
            .map(|i| (0..n).map(|j| s[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
            + 1.0;
        let f = |lam: f64| det(&(s - &Matrix::identity(n).scale(lam)));
        let grid = 20_000;
        let mut roots = Vec::new();
        let h = 2.0 * radius / grid as f64;
        let mut x0 = -radius;
        let mut f0 = f(x0);
        for k in 1..=grid {
            let x1 = -radius + k as f64 * h;
            let f1 = f(x1);
            if f0 == 0.0 {
                roots.push(x0);
            } else if f0.signum() != f1.signum() {
                let (mut lo, mut hi, mut flo) = (x0, x1, f0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = f(mid);
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            x0 = x1;
            f0 = f1;
        }
        roots
    }

    #[test]
    fn identity_and_diagonal_bounds() {
        let b = sym_eig_bounds(&Matrix::identity(3), DEFAULT_TOL).unwrap();
        assert_eq!((b.lambda_min, b.lambda_max), (1.0, 1.0));
        let b = sym_eig_bounds(&Matrix::diag(&[1.0, 2.0, 3.0]), DEFAULT_TOL).unwrap();
        assert_eq!((b.lambda_min, b.lambda_max), (1.0, 3.0));
    }

    #[test]
    fn random_symmetric_matches_bisection_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let g = Matrix::from_fn(5, 5, |_, _| rng.random_range(-2.0..2.0));
            let s = (&g + &g.transpose()).scale(0.5);
            let roots = char_poly_roots_by_bisection(&s);
            let b = sym_eig_bounds(&s, DEFAULT_TOL).unwrap();
            let lo = roots.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = roots.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!((b.lambda_min - lo).abs() < 1e-8, "{} vs {lo}", b.lambda_min);
            assert!((b.lambda_max - hi).abs() < 1e-8, "{} vs {hi}", b.lambda_max);
        }
    }

    #[test]
    fn errors_on_shape_and_asymmetry() {
        assert!(matches!(
            sym_eig_bounds(&Matrix::zeros(2, 3), DEFAULT_TOL),
            Err(MatError::NonSquare { rows: 2, cols: 3 })
        ));
        let s = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            sym_eig_bounds(&s, DEFAULT_TOL),
            Err(MatError::AsymmetryExceedsTol { .. })
        ));
        // roundoff-level asymmetry is absorbed
        let s = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.5 + 1e-14, 1.0]]).unwrap();
        assert!(sym_eig_bounds(&s, DEFAULT_TOL).is_ok());
        assert!(matches!(
            Matrix::new(1, 1, vec![f64::NAN]),
            Err(MatError::NonFinite { .. })
        ));
    }

    #[test]
    fn nsd_examples() {
        assert!(is_nsd(&Matrix::identity(2).scale(-1.0), DEFAULT_TOL).unwrap());
        assert!(is_nsd(&Matrix::zeros(3, 3), 1e-9).unwrap());
        assert!(!is_nsd(&Matrix::identity(2), DEFAULT_TOL).unwrap());
        assert!(matches!(is_nsd(&Matrix::zeros(1, 2), 1e-9), Err(MatError::NonSquare { .. })));
    }

    #[test]
    fn least_squares_examples() {
        let ls = least_squares(&Matrix::identity(2), &Matrix::identity(2)).unwrap();
        assert!((&ls.x - &Matrix::identity(2)).max_abs() < 1e-14);
        assert!(ls.residual < 1e-14);
        assert!(!ls.rank_deficient);

        let ls = least_squares(&Matrix::column(&[1.0, 1.0]), &Matrix::column(&[1.0, 3.0])).unwrap();
        assert!((ls.x[(0, 0)] - 2.0).abs() < 1e-14);
        assert!((ls.residual - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn least_squares_rank_deficient_returns_min_norm() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let b = Matrix::column(&[2.0, 2.0]);
        let ls = least_squares(&a, &b).unwrap();
        assert!(ls.rank_deficient);
        assert!((ls.x[(0, 0)] - 1.0).abs() < 1e-10 && (ls.x[(1, 0)] - 1.0).abs() < 1e-10);
        assert!(ls.residual < 1e-10);
        assert!(matches!(
            least_squares(&a, &Matrix::zeros(3, 1)),
            Err(MatError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn solve_matches_product() {
        let a = Matrix::from_rows(&[vec![4.0, 1.0], vec![2.0, 3.0]]).unwrap();
        let x = Matrix::column(&[1.0, -2.0]);
        let b = &a * &x;
        assert!((&a.solve(&b).unwrap() - &x).max_abs() < 1e-14);
        let sing = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(sing.solve(&b), Err(MatError::Singular));
    }

    #[test]
    fn eigenvectors_reconstruct() {
        let s = Matrix::from_rows(&[
            vec![4.0, 1.0, -2.0],
            vec![1.0, 2.0, 0.5],
            vec![-2.0, 0.5, 3.0],
        ])
        .unwrap();
        let e = sym_eigen(&s, DEFAULT_TOL).unwrap();
        let rebuilt = &(&e.vectors * &Matrix::diag(&e.values)) * &e.vectors.transpose();
        assert!((&rebuilt - &s).max_abs() < 1e-12);
    }

    #[test]
    fn serde_as_nested_rows() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(text, "[[1.0,2.0],[3.0,4.0]]");
        let back: Matrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<Matrix>("[[1.0],[2.0,3.0]]").is_err());
    }

    fn symmetric(n: usize) -> impl Strategy<Value = Matrix> {
        proptest::collection::vec(-5.0f64..5.0, n * n).prop_map(move |d| {
            let g = Matrix::new(n, n, d).unwrap();
            (&g + &g.transpose()).scale(0.5)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn rayleigh_quotient_within_bounds(
            s in (1usize..7).prop_flat_map(symmetric),
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let b = sym_eig_bounds(&s, DEFAULT_TOL).unwrap();
            let scale = 1f64.max(b.lambda_max.abs()).max(b.lambda_min.abs());
            for _ in 0..1000 {
                let v: Vec<f64> = (0..s.rows()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let nv: f64 = v.iter().map(|x| x * x).sum();
                let q = s.quad_form(&v).unwrap();
                prop_assert!(q >= b.lambda_min * nv - 1e-8 * scale * nv.max(1.0));
                prop_assert!(q <= b.lambda_max * nv + 1e-8 * scale * nv.max(1.0));
            }
        }

        #[test]
        fn gram_constructions_have_consistent_minors(
            d in proptest::collection::vec(-3.0f64..3.0, 12),
        ) {
            let g = Matrix::new(4, 3, d).unwrap();
            let psd = &g * &g.transpose();
            let nsd = psd.scale(-1.0);
            prop_assert!(is_nsd(&nsd, 1e-9).unwrap());
            prop_assert!(is_psd(&psd, 1e-9).unwrap());
            // every principal 2x2 minor of an NSD matrix is NSD
            for i in 0..4 {
                for j in (i + 1)..4 {
                    let minor = Matrix::from_rows(&[
                        vec![nsd[(i, i)], nsd[(i, j)]],
                        vec![nsd[(j, i)], nsd[(j, j)]],
                    ]).unwrap();
                    prop_assert!(is_nsd(&minor, 1e-9).unwrap());
                }
            }
        }

        #[test]
        fn least_squares_beats_perturbations(
            d in proptest::collection::vec(-3.0f64..3.0, 10),
            bd in proptest::collection::vec(-3.0f64..3.0, 5),
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let a = Matrix::new(5, 2, d).unwrap();
            let b = Matrix::new(5, 1, bd).unwrap();
            let ls = least_squares(&a, &b).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..100 {
                let x0 = Matrix::from_fn(2, 1, |i, j| ls.x[(i, j)] + rng.random_range(-0.1..0.1));
                let r0 = (&(&a * &x0) - &b).frobenius();
                prop_assert!(ls.residual <= r0 + 1e-9 * (1.0 + r0));
            }
        }
    }
}
