//! Dense matrix carrier and the small set of factorizations every selection
//! algorithm leans on: thin SVD, orthonormal bases, projections, volumes and
//! tail energies.
//!
//! Matrices are dense, row-major and `f64`. Singular values below
//! `max(m, n) * eps * sigma_1` are treated as zero throughout the crate
//! (see [`rank_tolerance`]).

use std::fmt::Write as _;
use std::ops::{Index, IndexMut};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{LowRankError, Result};

/// Machine epsilon for `f64`.
pub const EPS: f64 = f64::EPSILON;

/// Dense real matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries, rejecting empty shapes and non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(LowRankError::InvalidInput(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(LowRankError::DimensionMismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(LowRankError::NonFinite(pos));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix entry by entry. Panics if `f` produces a non-finite value.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data).expect("from_fn produced an invalid matrix")
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LowRankError::DimensionMismatch(
                "rows have different lengths".into(),
            ));
        }
        Self::new(r, c, rows.concat())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Row-major entries.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self * other`.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(LowRankError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (l, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(l)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ * other`.
    pub fn t_matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows {
            return Err(LowRankError::DimensionMismatch(format!(
                "cannot multiply ({}x{})ᵀ by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.cols, other.cols);
        for l in 0..self.rows {
            let b_row = other.row(l);
            for (i, &a) in self.row(l).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.shape() != other.shape() {
            return Err(LowRankError::DimensionMismatch(format!(
                "cannot subtract {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, factor: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Euclidean norms of all columns.
    pub fn column_norms(&self) -> Vec<f64> {
        let mut sums = vec![0.0_f64; self.cols];
        let scale = self.max_abs();
        if scale == 0.0 {
            return sums;
        }
        for i in 0..self.rows {
            for (s, &v) in sums.iter_mut().zip(self.row(i)) {
                let w = v / scale;
                *s += w * w;
            }
        }
        sums.iter().map(|s| s.sqrt() * scale).collect()
    }

    fn check_indices(indices: &[usize], bound: usize) -> Result<()> {
        match indices.iter().find(|&&i| i >= bound) {
            Some(&index) => Err(LowRankError::IndexOutOfRange { index, bound }),
            None => Ok(()),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Result<DenseMatrix> {
        Self::check_indices(cols, self.cols)?;
        if cols.is_empty() {
            return Err(LowRankError::InvalidInput("empty column selection".into()));
        }
        Ok(Self::from_fn(self.rows, cols.len(), |i, j| self[(i, cols[j])]))
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<DenseMatrix> {
        Self::check_indices(rows, self.rows)?;
        if rows.is_empty() {
            return Err(LowRankError::InvalidInput("empty row selection".into()));
        }
        Ok(Self::from_fn(rows.len(), self.cols, |i, j| self[(rows[i], j)]))
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<DenseMatrix> {
        Self::check_indices(rows, self.rows)?;
        Self::check_indices(cols, self.cols)?;
        if rows.is_empty() || cols.is_empty() {
            return Err(LowRankError::InvalidInput("empty submatrix selection".into()));
        }
        Ok(Self::from_fn(rows.len(), cols.len(), |i, j| {
            self[(rows[i], cols[j])]
        }))
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<f64>) -> DenseMatrix {
        DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Euclidean norm with scaling against overflow.
pub fn norm2(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let s: f64 = v.iter().map(|x| (x / scale) * (x / scale)).sum();
    scale * s.sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Thin singular value decomposition `A = U diag(sigma) Vᵀ`.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    /// `m x r` with orthonormal columns.
    pub u: DenseMatrix,
    /// Non-increasing, nonnegative, length `r = min(m, n)`.
    pub sigma: Vec<f64>,
    /// `n x r` with orthonormal columns.
    pub v: DenseMatrix,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (j, s) in self.sigma.iter().enumerate() {
                us[(i, j)] *= s;
            }
        }
        us.matmul(&self.v.transpose()).expect("consistent SVD shapes")
    }
}

fn to_faer(a: &DenseMatrix) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.rows, a.cols, |i, j| a[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD. Singular values are returned in non-increasing order.
pub fn svd(a: &DenseMatrix) -> Result<SvdFactors> {
    let (m, n) = a.shape();
    let r = m.min(n);
    if a.max_abs() == 0.0 {
        // Any orthonormal bases will do for the zero matrix.
        let u = DenseMatrix::from_fn(m, r, |i, j| if i == j { 1.0 } else { 0.0 });
        let v = DenseMatrix::from_fn(n, r, |i, j| if i == j { 1.0 } else { 0.0 });
        return Ok(SvdFactors {
            u,
            sigma: vec![0.0; r],
            v,
        });
    }
    let dec = to_faer(a)
        .thin_svd()
        .map_err(|_| LowRankError::SvdNoConvergence)?;
    let s = dec.S();
    let sigma: Vec<f64> = (0..r).map(|i| s[i]).collect();
    if sigma.iter().any(|s| !s.is_finite()) {
        return Err(LowRankError::SvdNoConvergence);
    }
    Ok(SvdFactors {
        u: from_faer(dec.U()),
        sigma,
        v: from_faer(dec.V()),
    })
}

/// Singular values only, non-increasing.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    if a.max_abs() == 0.0 {
        return Ok(vec![0.0; a.rows().min(a.cols())]);
    }
    let sigma = to_faer(a)
        .singular_values()
        .map_err(|_| LowRankError::SvdNoConvergence)?;
    if sigma.iter().any(|s| !s.is_finite()) {
        return Err(LowRankError::SvdNoConvergence);
    }
    Ok(sigma)
}

/// Absolute threshold below which singular values of an `m x n` matrix with
/// largest singular value `sigma_1` count as zero.
#[inline]
pub fn rank_tolerance(m: usize, n: usize, sigma_1: f64) -> f64 {
    m.max(n) as f64 * EPS * sigma_1
}

/// Number of singular values above [`rank_tolerance`].
pub fn numerical_rank(sigma: &[f64], m: usize, n: usize) -> usize {
    let Some(&s1) = sigma.first() else { return 0 };
    if s1 == 0.0 {
        return 0;
    }
    let tol = rank_tolerance(m, n, s1);
    sigma.iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis of `range(A)`; one column per singular value above the rank tolerance.
pub fn orthonormal_basis(a: &DenseMatrix) -> Result<DenseMatrix> {
    let f = svd(a)?;
    let rank = numerical_rank(&f.sigma, a.rows(), a.cols());
    if rank == 0 {
        return Err(LowRankError::ZeroRange);
    }
    Ok(DenseMatrix::from_fn(a.rows(), rank, |i, j| f.u[(i, j)]))
}

/// Orthonormal basis of the span of all columns of `a` (`rows ≥ cols`), from
/// a thin Householder QR factorization. Unlike [`orthonormal_basis`] nothing
/// is truncated, so nearly dependent columns still contribute a direction.
pub fn column_space_basis(a: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols() > a.rows() {
        return Err(LowRankError::DimensionMismatch(format!(
            "{} columns exceed {} rows",
            a.cols(),
            a.rows()
        )));
    }
    Ok(DenseMatrix::from_nalgebra(&a.to_nalgebra().qr().q()))
}

/// `A - Q Qᵀ A` where `Q` is an orthonormal basis of the selected columns.
///
/// The projection is applied twice; the second pass removes the component
/// left behind by rounding in the first.
pub fn project_residual(a: &DenseMatrix, cols: &[usize]) -> Result<DenseMatrix> {
    if cols.is_empty() {
        return Err(LowRankError::InvalidInput("empty index tuple".into()));
    }
    let selected = a.select_columns(cols)?;
    let q = match orthonormal_basis(&selected) {
        Ok(q) => q,
        Err(LowRankError::ZeroRange) => return Ok(a.clone()),
        Err(e) => return Err(e),
    };
    let mut res = a.clone();
    for _ in 0..2 {
        let coeff = q.t_matmul(&res)?;
        res = res.sub(&q.matmul(&coeff)?)?;
    }
    for &j in cols {
        for i in 0..res.rows() {
            res[(i, j)] = 0.0;
        }
    }
    Ok(res)
}

/// Product of the singular values of `B` (transposed internally when it is wide).
/// Numerically rank-deficient input yields exactly zero.
pub fn volume(b: &DenseMatrix) -> Result<f64> {
    let sigma = singular_values(b)?;
    let rank = numerical_rank(&sigma, b.rows(), b.cols());
    if rank < sigma.len() {
        return Ok(0.0);
    }
    Ok(sigma.iter().product())
}

/// Determinant by LU with partial pivoting.
pub fn determinant(a: &DenseMatrix) -> Result<f64> {
    let n = a.rows();
    if a.cols() != n {
        return Err(LowRankError::DimensionMismatch(
            "determinant requires a square matrix".into(),
        ));
    }
    let mut lu = a.clone();
    let mut det = 1.0;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&x, &y| lu[(x, k)].abs().total_cmp(&lu[(y, k)].abs()))
            .unwrap();
        if lu[(p, k)] == 0.0 {
            return Ok(0.0);
        }
        if p != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
            det = -det;
        }
        let pivot = lu[(k, k)];
        det *= pivot;
        for i in k + 1..n {
            let l = lu[(i, k)] / pivot;
            if l != 0.0 {
                for j in k + 1..n {
                    lu[(i, j)] -= l * lu[(k, j)];
                }
            }
        }
    }
    Ok(det)
}

/// Solves `A X = B` by LU with partial pivoting. Fails on a pivot below
/// `n * eps * max|A|`.
pub fn lu_solve(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows();
    if a.cols() != n || b.rows() != n {
        return Err(LowRankError::DimensionMismatch(format!(
            "cannot solve {}x{} system with {}x{} right-hand side",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let tol = n as f64 * EPS * a.max_abs();
    let mut lu = a.clone();
    let mut x = b.clone();
    let nrhs = b.cols();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&r, &s| lu[(r, k)].abs().total_cmp(&lu[(s, k)].abs()))
            .unwrap();
        if lu[(p, k)].abs() <= tol {
            return Err(LowRankError::SingularSubmatrix);
        }
        if p != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
            for j in 0..nrhs {
                let tmp = x[(k, j)];
                x[(k, j)] = x[(p, j)];
                x[(p, j)] = tmp;
            }
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let l = lu[(i, k)] / pivot;
            lu[(i, k)] = l;
            for j in k + 1..n {
                lu[(i, j)] -= l * lu[(k, j)];
            }
            for j in 0..nrhs {
                x[(i, j)] -= l * x[(k, j)];
            }
        }
    }
    for k in (0..n).rev() {
        for j in 0..nrhs {
            let mut s = x[(k, j)];
            for l in k + 1..n {
                s -= lu[(k, l)] * x[(l, j)];
            }
            x[(k, j)] = s / lu[(k, k)];
        }
    }
    Ok(x)
}

/// Moore–Penrose pseudoinverse, truncated at the rank tolerance.
pub fn pinv(a: &DenseMatrix) -> Result<DenseMatrix> {
    let f = svd(a)?;
    let rank = numerical_rank(&f.sigma, a.rows(), a.cols());
    let mut out = DenseMatrix::zeros(a.cols(), a.rows());
    for l in 0..rank {
        let inv = 1.0 / f.sigma[l];
        for i in 0..a.cols() {
            let vil = f.v[(i, l)] * inv;
            if vil == 0.0 {
                continue;
            }
            for j in 0..a.rows() {
                out[(i, j)] += vil * f.u[(j, l)];
            }
        }
    }
    Ok(out)
}

/// Orthogonal factor of a Householder QR factorization of a square matrix,
/// with the sign convention that `R` has a nonnegative diagonal.
pub fn qr_orthogonal_factor(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(LowRankError::DimensionMismatch(
            "QR orthogonal factor requires a square matrix".into(),
        ));
    }
    let mut r = a.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let x: Vec<f64> = (k..n).map(|i| r[(i, k)]).collect();
        let alpha = norm2(&x);
        let mut v = x.clone();
        if alpha == 0.0 {
            reflectors.push(vec![0.0; n - k]);
            continue;
        }
        let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign * alpha;
        let vn = norm2(&v);
        for vi in v.iter_mut() {
            *vi /= vn;
        }
        for j in k..n {
            let s: f64 = (k..n).map(|i| v[i - k] * r[(i, j)]).sum();
            for i in k..n {
                r[(i, j)] -= 2.0 * v[i - k] * s;
            }
        }
        reflectors.push(v);
    }
    // Q = H_0 H_1 ... H_{n-1}, accumulated backwards onto the identity.
    let mut q = DenseMatrix::identity(n);
    for k in (0..n).rev() {
        let v = &reflectors[k];
        for j in 0..n {
            let s: f64 = (k..n).map(|i| v[i - k] * q[(i, j)]).sum();
            if s != 0.0 {
                for i in k..n {
                    q[(i, j)] -= 2.0 * v[i - k] * s;
                }
            }
        }
    }
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            for i in 0..n {
                q[(i, k)] = -q[(i, k)];
            }
        }
    }
    Ok(q)
}

/// Squared Frobenius error of the best rank-`k` approximation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEnergy {
    pub k: usize,
    pub value: f64,
}

/// `sigma[k]^2 + ... + sigma[last]^2`, accumulated from the smallest term up.
pub fn tail_energy(sigma: &[f64], k: usize) -> Result<TailEnergy> {
    if k > sigma.len() {
        return Err(LowRankError::IndexOutOfRange {
            index: k,
            bound: sigma.len() + 1,
        });
    }
    let value = sigma[k..].iter().rev().fold(0.0, |acc, s| acc + s * s);
    Ok(TailEnergy { k, value })
}

/// Parses a matrix from CSV text: one row per line, comma separated.
/// Blank lines and lines starting with `#` are ignored.
pub fn parse_csv(text: &str) -> Result<DenseMatrix> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|field| {
                field.trim().parse::<f64>().map_err(|e| {
                    LowRankError::Parse(format!("line {}: {:?}: {e}", lineno + 1, field.trim()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(LowRankError::Parse("no matrix rows found".into()));
    }
    DenseMatrix::from_rows(&rows)
}

/// Formats a value with 17 significant digits, which round-trips any `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_csv_string(a: &DenseMatrix) -> String {
    let mut out = String::with_capacity(a.rows() * a.cols() * 24);
    for i in 0..a.rows() {
        for (j, v) in a.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", format_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    parse_csv(&std::fs::read_to_string(path)?)
}

pub fn write_csv(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    std::fs::write(path, to_csv_string(a))?;
    Ok(())
}
