//! Small dense linear algebra: LU, Cholesky, cyclic Jacobi eigensolvers for real
//! symmetric and complex Hermitian matrices, and the tridiagonal QL iteration used
//! by Golub–Welsch.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::config::SignedLog;
use crate::error::{Error, Result};

/// Row-major real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    /// Largest absolute entry of `self − other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| libm::fabs(a - b)).fold(0.0, f64::max)
    }

    /// LU factorization with partial pivoting.
    pub fn lu(&self) -> Lu {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = false;
        for k in 0..n {
            let mut piv = k;
            let mut best = libm::fabs(a[(k, k)]);
            for i in k + 1..n {
                let v = libm::fabs(a[(i, k)]);
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == 0.0 {
                singular = true;
                continue;
            }
            if piv != k {
                for j in 0..n {
                    a.data.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
                sign = -sign;
            }
            let d = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / d;
                a[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        a.data[i * n + j] -= f * a.data[k * n + j];
                    }
                }
            }
        }
        Lu { a, perm, sign, singular }
    }

    pub fn det(&self) -> f64 {
        self.lu().det().value()
    }

    pub fn inverse(&self) -> Result<Matrix> {
        let lu = self.lu();
        if lu.singular {
            return Err(Error::Numerical("singular matrix".into()));
        }
        let n = self.rows;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = lu.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }

    /// Lower Cholesky factor; fails unless the matrix is positive definite.
    pub fn cholesky(&self) -> Result<Matrix> {
        let n = self.rows;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) {
                return Err(Error::Numerical(alloc::format!(
                    "matrix is not positive definite (pivot {j} = {d:e})"
                )));
            }
            let d = libm::sqrt(d);
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(l)
    }

    /// Eigenvalues (ascending) and eigenvectors (columns) of a symmetric matrix by
    /// cyclic Jacobi rotations.
    pub fn symmetric_eigen(&self) -> Result<(Vec<f64>, Matrix)> {
        let n = self.rows;
        let mut a = self.clone();
        let mut v = Matrix::identity(n);
        for _sweep in 0..100 {
            let mut off = 0.0;
            let mut diag = 0.0;
            for i in 0..n {
                diag += a[(i, i)] * a[(i, i)];
                for j in i + 1..n {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
            if off <= 1e-32 * diag || off == 0.0 {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
                let vals = idx.iter().map(|&i| a[(i, i)]).collect();
                let vecs = Matrix::from_fn(n, n, |r, c| v[(r, idx[c])]);
                return Ok((vals, vecs));
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = libm::copysign(1.0, tau) / (libm::fabs(tau) + libm::sqrt(1.0 + tau * tau));
                    let c = 1.0 / libm::sqrt(1.0 + t * t);
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        Err(Error::Numerical("Jacobi eigensolver did not converge".into()))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub struct Lu {
    a: Matrix,
    perm: Vec<usize>,
    sign: f64,
    pub singular: bool,
}

impl Lu {
    pub fn det(&self) -> SignedLog {
        if self.singular {
            return SignedLog { ln_abs: f64::NEG_INFINITY, sign: 0.0 };
        }
        let mut ln = 0.0;
        let mut sign = self.sign;
        for i in 0..self.a.rows {
            let d = self.a[(i, i)];
            ln += libm::log(libm::fabs(d));
            if d < 0.0 {
                sign = -sign;
            }
        }
        SignedLog { ln_abs: ln, sign }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.a.rows;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.a[(i, k)] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.a[(i, k)] * x[k];
            }
            x[i] /= self.a[(i, i)];
        }
        x
    }
}

/// Row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn adjoint(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    /// `A* A`.
    pub fn gram(&self) -> CMatrix {
        let c = self.cols;
        let mut g = CMatrix::zeros(c, c);
        for i in 0..c {
            for j in i..c {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..self.rows {
                    s += self[(k, i)].conj() * self[(k, j)];
                }
                g[(i, j)] = s;
                g[(j, i)] = s.conj();
            }
        }
        g
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues (ascending) of a Hermitian matrix by cyclic complex Jacobi rotations.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.rows;
        let mut a = self.clone();
        for _sweep in 0..100 {
            let mut off = 0.0;
            let mut diag = 0.0;
            for i in 0..n {
                diag += a[(i, i)].re * a[(i, i)].re;
                for j in i + 1..n {
                    off += a[(i, j)].norm_sqr();
                }
            }
            if off <= 1e-32 * diag || off == 0.0 {
                let mut vals: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
                vals.sort_by(f64::total_cmp);
                return Ok(vals);
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    let r = apq.norm();
                    if r == 0.0 {
                        continue;
                    }
                    // Reduce to a real rotation: A_pq = r e^{iφ}.
                    let ph = apq / r;
                    let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * r);
                    let t = libm::copysign(1.0, tau) / (libm::fabs(tau) + libm::sqrt(1.0 + tau * tau));
                    let c = 1.0 / libm::sqrt(1.0 + t * t);
                    let s = t * c;
                    // Columns: p' = c p − s e^{-iφ} q, q' = s e^{iφ} p + c q.
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = akp * c - akq * ph.conj() * s;
                        a[(k, q)] = akp * ph * s + akq * c;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = apk * c - aqk * ph * s;
                        a[(q, k)] = apk * ph.conj() * s + aqk * c;
                    }
                    a[(p, q)] = Complex64::new(0.0, 0.0);
                    a[(q, p)] = Complex64::new(0.0, 0.0);
                    a[(p, p)].im = 0.0;
                    a[(q, q)].im = 0.0;
                }
            }
        }
        Err(Error::Numerical("Hermitian Jacobi eigensolver did not converge".into()))
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues (ascending) and first eigenvector components of the symmetric
/// tridiagonal matrix with diagonal `d` and off-diagonal `e` (implicit QL).
pub fn tridiagonal_eigen(d: &[f64], e: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = d.len();
    let mut d = d.to_vec();
    let mut e: Vec<f64> = e.iter().copied().chain(core::iter::once(0.0)).collect();
    e.truncate(n);
    let mut z = vec![0.0; n];
    if n > 0 {
        z[0] = 1.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = libm::fabs(d[m]) + libm::fabs(d[m + 1]);
                if libm::fabs(e[m]) <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Numerical("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + libm::copysign(r, g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = libm::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    Ok((idx.iter().map(|&i| d[i]).collect(), idx.iter().map(|&i| z[i]).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Matrix {
        Matrix::from_fn(4, 4, |i, j| 1.0 / (1.0 + i as f64 + j as f64) + if i == j { 1.0 } else { 0.0 })
    }

    #[test]
    fn inverse_and_det() {
        let a = sample();
        let inv = a.inverse().unwrap();
        assert!(a.matmul(&inv).max_abs_diff(&Matrix::identity(4)) < 1e-13);
        let b = Matrix::from_fn(2, 2, |i, j| [[1.0, 2.0], [3.0, 4.0]][i][j]);
        assert!((b.det() + 2.0).abs() < 1e-14);
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = sample();
        let l = a.cholesky().unwrap();
        assert!(l.matmul(&l.transpose()).max_abs_diff(&a) < 1e-14);
        let neg = Matrix::from_fn(2, 2, |i, j| if i == j { -1.0 } else { 0.0 });
        assert!(neg.cholesky().is_err());
    }

    #[test]
    fn symmetric_eigen_reconstructs() {
        let a = sample();
        let (vals, v) = a.symmetric_eigen().unwrap();
        let d = Matrix::from_fn(4, 4, |i, j| if i == j { vals[i] } else { 0.0 });
        let back = v.matmul(&d).matmul(&v.transpose());
        assert!(back.max_abs_diff(&a) < 1e-13);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn hermitian_eigen_matches_real_embedding() {
        let n = 3;
        let mut h = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let z = Complex64::new(0.3 * (i + j) as f64 + 0.1, if i == j { 0.0 } else { 0.2 * (j as f64 - i as f64) + 0.05 });
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        let vals = h.hermitian_eigenvalues().unwrap();
        let big = Matrix::from_fn(2 * n, 2 * n, |i, j| {
            let z = h[(i % n, j % n)];
            match (i < n, j < n) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        let (bv, _) = big.symmetric_eigen().unwrap();
        for (k, v) in vals.iter().enumerate() {
            assert!((v - bv[2 * k]).abs() < 1e-12);
            assert!((v - bv[2 * k + 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let d = [2.0, 1.0, 3.0, 0.5];
        let e = [0.4, -0.7, 0.2];
        let (vals, z) = tridiagonal_eigen(&d, &e).unwrap();
        let dense = Matrix::from_fn(4, 4, |i, j| {
            if i == j {
                d[i]
            } else if i + 1 == j {
                e[i]
            } else if j + 1 == i {
                e[j]
            } else {
                0.0
            }
        });
        let (dv, vecs) = dense.symmetric_eigen().unwrap();
        for k in 0..4 {
            assert!((vals[k] - dv[k]).abs() < 1e-13);
            assert!((z[k].abs() - vecs[(0, k)].abs()).abs() < 1e-12);
        }
    }
}
