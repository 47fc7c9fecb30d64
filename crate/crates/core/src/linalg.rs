//! Dense symmetric linear algebra.
//!
//! Everything here works on small dense matrices (a few hundred rows at
//! most). The eigensolver is the classic Householder tridiagonalization
//! followed by implicit QL with shifts.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};

/// Absolute guard on the determinant of Woodbury inner systems.
pub const WOODBURY_GUARD: f64 = 1e-12;

/// Dense symmetric matrix stored row-major in full.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymMatrix").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the lower triangle `j <= i`.
    pub fn from_lower_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds a matrix from full rows. Rows must be square and symmetric up
    /// to a relative `1e-12`; the stored matrix is the symmetric average.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(invalid("matrix must have at least one row"));
        }
        let mut scale = 0.0f64;
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
            }
            for &v in r {
                if !v.is_finite() {
                    return Err(invalid("non-finite matrix entry"));
                }
                scale = scale.max(v.abs());
            }
        }
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                let (a, b) = (rows[i][j], rows[j][i]);
                if (a - b).abs() > 1e-12 * (1.0 + scale) {
                    return Err(invalid("matrix is not symmetric"));
                }
                m.set(i, j, 0.5 * (a + b));
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets entries `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    /// Adds `v` to `(i, j)` and, off the diagonal, to `(j, i)`.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] += v;
        if i != j {
            self.data[j * self.dim + i] += v;
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| dot(self.row(i), v)).collect()
    }

    /// Quadratic form `v^T M v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        dot(v, &self.mul_vec(v))
    }

    /// Frobenius inner product.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        dot(&self.data, &other.data)
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        SymMatrix { dim: self.dim, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add_scaled(&mut self, other: &SymMatrix, s: f64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix { rows: self.dim, cols: self.dim, data: self.data.clone() }
    }

    /// Adds `U K U^T` where `U = [u0 u1]` and `K` is a symmetric 2x2.
    /// Only the upper triangle is computed and then mirrored.
    pub fn add_sym_rank2(&mut self, u0: &[f64], u1: &[f64], k: [[f64; 2]; 2]) {
        let n = self.dim;
        for i in 0..n {
            let t0 = k[0][0] * u0[i] + k[0][1] * u1[i];
            let t1 = k[1][0] * u0[i] + k[1][1] * u1[i];
            for j in i..n {
                let v = self.data[i * n + j] + t0 * u0[j] + t1 * u1[j];
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }

    /// Adds `c u u^T`.
    pub fn add_sym_rank1(&mut self, u: &[f64], c: f64) {
        let n = self.dim;
        for i in 0..n {
            let t = c * u[i];
            for j in i..n {
                let v = self.data[i * n + j] + t * u[j];
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }
}

/// General dense matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: Matrix,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.eigenvalues.len();
        let p = &self.eigenvectors;
        SymMatrix::from_lower_fn(n, |i, j| {
            (0..n).map(|k| p.get(i, k) * self.eigenvalues[k] * p.get(j, k)).sum()
        })
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.eigenvalues.len()).map(|i| self.eigenvectors.get(i, k)).collect()
    }
}

pub fn spectral_decompose(m: &SymMatrix) -> Result<SpectralDecomposition> {
    if !m.is_finite() {
        return Err(invalid("non-finite entry in eigenvalue input"));
    }
    let n = m.dim();
    let mut v = m.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut v, &mut d, &mut e);
    tql2(n, &mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let eigenvalues = order.iter().map(|&k| d[k]).collect();
    let eigenvectors = Matrix::from_fn(n, n, |i, k| v[i * n + order[k]]);
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

pub fn min_eigenvalue(m: &SymMatrix) -> Result<f64> {
    Ok(spectral_decompose(m)?.eigenvalues[0])
}

// Householder reduction to tridiagonal form. On return `v` holds the
// accumulated orthogonal transform, `d` the diagonal and `e[1..]` the
// subdiagonal.
fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let idx = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
                v[idx(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in j + 1..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = 0.0;
    }
    v[idx(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

// Implicit QL iterations on the tridiagonal form.
fn tql2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let idx = |i: usize, j: usize| i * n + j;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::NoConvergence);
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[idx(k, i + 1)];
                        v[idx(k, i + 1)] = s * v[idx(k, i)] + c * h;
                        v[idx(k, i)] = c * v[idx(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Lower Cholesky factor, row-major.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn log_det(&self) -> f64 {
        (0..self.dim).map(|i| self.l[i * self.dim + i].ln()).sum::<f64>() * 2.0
    }

    /// Inverse of the factored matrix.
    pub fn inverse(&self) -> SymMatrix {
        let n = self.dim;
        // Invert L in place into `li` (lower triangular).
        let mut li = vec![0.0; n * n];
        for i in 0..n {
            li[i * n + i] = 1.0 / self.l[i * n + i];
            for j in 0..i {
                let mut s = 0.0;
                for k in j..i {
                    s += self.l[i * n + k] * li[k * n + j];
                }
                li[i * n + j] = -s / self.l[i * n + i];
            }
        }
        SymMatrix::from_lower_fn(n, |i, j| {
            // (L^-T L^-1)_{ij} = sum_k li[k][i] li[k][j], k >= max(i,j) = i
            (i..n).map(|k| li[k * n + i] * li[k * n + j]).sum()
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}

pub fn cholesky(m: &SymMatrix) -> Result<Cholesky> {
    let n = m.dim();
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut s = m.get(j, j);
        for k in 0..j {
            s -= l[j * n + k] * l[j * n + k];
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let d = s.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Ok(Cholesky { dim: n, l })
}

pub fn is_positive_definite(m: &SymMatrix) -> bool {
    cholesky(m).is_ok()
}

pub fn dense_inverse(m: &SymMatrix) -> Result<SymMatrix> {
    Ok(cholesky(m)?.inverse())
}

pub fn log_det(m: &SymMatrix) -> Result<f64> {
    Ok(cholesky(m)?.log_det())
}

/// `(M - c v v^T)^{-1}` from `W = M^{-1}`.
pub fn woodbury_rank1(w: &SymMatrix, v: &[f64], c: f64) -> Result<SymMatrix> {
    if v.len() != w.dim() {
        return Err(Error::DimensionMismatch { expected: w.dim(), got: v.len() });
    }
    let wv = w.mul_vec(v);
    let denom = 1.0 - c * dot(v, &wv);
    if denom.abs() <= WOODBURY_GUARD {
        return Err(Error::SingularUpdate(denom));
    }
    let mut out = w.clone();
    if c != 0.0 {
        out.add_sym_rank1(&wv, c / denom);
    }
    Ok(out)
}

/// `(M - s E C)^{-1}` from `W = M^{-1}`, with `E` of shape `dim x 2` and `C`
/// of shape `2 x dim`. `E C` must be symmetric.
pub fn woodbury_rank2(w: &SymMatrix, e: &Matrix, c: &Matrix, s: f64) -> Result<SymMatrix> {
    let n = w.dim();
    if e.rows() != n || e.cols() != 2 {
        return Err(Error::DimensionMismatch { expected: n, got: e.rows() });
    }
    if c.rows() != 2 || c.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: c.cols() });
    }
    if s == 0.0 {
        return Err(Error::ZeroStep);
    }
    let wm = w.to_matrix();
    let we = wm.mul(e)?;
    let cw = c.mul(&wm)?;
    let cwe = cw.mul(e)?;
    // (1/s I - CWE)^{-1} = s (I - s CWE)^{-1}; the scaled form keeps tiny s
    // well conditioned.
    let a = 1.0 - s * cwe.get(0, 0);
    let b = -s * cwe.get(0, 1);
    let cc = -s * cwe.get(1, 0);
    let d = 1.0 - s * cwe.get(1, 1);
    let det = a * d - b * cc;
    if det.abs() <= WOODBURY_GUARD {
        return Err(Error::SingularUpdate(det));
    }
    let k = [[s * d / det, -s * b / det], [-s * cc / det, s * a / det]];
    let mut out = w.clone();
    for i in 0..n {
        for j in 0..=i {
            let mut v = 0.0;
            for p in 0..2 {
                for q in 0..2 {
                    v += we.get(i, p) * k[p][q] * cw.get(q, j);
                }
            }
            let vt = {
                let mut t = 0.0;
                for p in 0..2 {
                    for q in 0..2 {
                        t += we.get(j, p) * k[p][q] * cw.get(q, i);
                    }
                }
                t
            };
            out.set(i, j, w.get(i, j) + 0.5 * (v + vt));
        }
    }
    Ok(out)
}

/// In-place form of the symmetric rank-two update used by the solver.
///
/// The perturbation of the inverse is `M <- M - E B E^T`, where `E` has the
/// two columns whose images under `W` are `u0 = W e_a`, `u1 = W e_b` (or any
/// other pair), `p` is `E^T W E` and `b` is symmetric. Returns the
/// determinant of `I - P B` and its condition number estimate
/// `||I - P B||_F^2 / |det|`, which bounds how much rounding in `w` the
/// update can amplify.
pub fn sym_block_update(
    w: &mut SymMatrix,
    u0: &[f64],
    u1: &[f64],
    p: [[f64; 2]; 2],
    b: [[f64; 2]; 2],
) -> Result<(f64, f64)> {
    // I - P B
    let m00 = 1.0 - (p[0][0] * b[0][0] + p[0][1] * b[1][0]);
    let m01 = -(p[0][0] * b[0][1] + p[0][1] * b[1][1]);
    let m10 = -(p[1][0] * b[0][0] + p[1][1] * b[1][0]);
    let m11 = 1.0 - (p[1][0] * b[0][1] + p[1][1] * b[1][1]);
    let det = m00 * m11 - m01 * m10;
    if !det.is_finite() || det.abs() <= WOODBURY_GUARD {
        return Err(Error::SingularUpdate(det));
    }
    let inv = [[m11 / det, -m01 / det], [-m10 / det, m00 / det]];
    // K = B (I - P B)^{-1}, symmetric in exact arithmetic.
    let mut k = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            k[i][j] = b[i][0] * inv[0][j] + b[i][1] * inv[1][j];
        }
    }
    let off = 0.5 * (k[0][1] + k[1][0]);
    k[0][1] = off;
    k[1][0] = off;
    w.add_sym_rank2(u0, u1, k);
    let frob2 = m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11;
    Ok((det, frob2 / det.abs()))
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix; eigenvalues below
/// `tol * max|lambda|` are treated as zero.
pub fn sym_pseudo_inverse(m: &SymMatrix, tol: f64) -> Result<SymMatrix> {
    let sd = spectral_decompose(m)?;
    let n = m.dim();
    let lmax = sd.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cut = tol * lmax.max(f64::MIN_POSITIVE);
    let inv: Vec<f64> =
        sd.eigenvalues.iter().map(|&l| if l.abs() > cut { 1.0 / l } else { 0.0 }).collect();
    let p = &sd.eigenvectors;
    Ok(SymMatrix::from_lower_fn(n, |i, j| (0..n).map(|k| p.get(i, k) * inv[k] * p.get(j, k)).sum()))
}
