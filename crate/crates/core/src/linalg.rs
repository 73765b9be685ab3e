//! Dense column-major complex matrices with BLAS/LAPACK backends.
//!
//! Column-major layout matches LAPACK directly and keeps eigenvector and
//! FFT column access contiguous. Products go through `zgemm`; Schur
//! factorization (used to eigendecompose unitary matrices) goes through
//! `zgees`. OpenBLAS is pinned to one thread by [`crate::init_runtime`];
//! concurrency lives at the experiment level.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Dense complex matrix, column-major.
#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl std::fmt::Debug for CMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CMat({}x{})", self.rows, self.cols)
    }
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for j in 0..n {
            m[(j, j)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                m[(r, c)] = f(r, c);
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

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn col(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for c in 0..self.cols {
            for r in 0..self.rows {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn scale(&mut self, s: C64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// `self * other` via zgemm.
    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut out = CMat::zeros(self.rows, other.cols);
        if self.rows == 0 || other.cols == 0 {
            return out;
        }
        unsafe {
            cblas::zgemm(
                cblas::Layout::ColumnMajor,
                cblas::Transpose::None,
                cblas::Transpose::None,
                self.rows as i32,
                other.cols as i32,
                self.cols as i32,
                C64::new(1.0, 0.0),
                &self.data,
                self.rows as i32,
                &other.data,
                other.rows as i32,
                C64::new(0.0, 0.0),
                &mut out.data,
                out.rows as i32,
            );
        }
        out
    }

    /// `self^H * other` via zgemm.
    pub fn adjoint_mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.rows, other.rows, "dimension mismatch in adjoint_mul");
        let mut out = CMat::zeros(self.cols, other.cols);
        if self.cols == 0 || other.cols == 0 {
            return out;
        }
        unsafe {
            cblas::zgemm(
                cblas::Layout::ColumnMajor,
                cblas::Transpose::Conjugate,
                cblas::Transpose::None,
                self.cols as i32,
                other.cols as i32,
                self.rows as i32,
                C64::new(1.0, 0.0),
                &self.data,
                self.rows as i32,
                &other.data,
                other.rows as i32,
                C64::new(0.0, 0.0),
                &mut out.data,
                out.rows as i32,
            );
        }
        out
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for (j, &vj) in v.iter().enumerate() {
            if vj == C64::new(0.0, 0.0) {
                continue;
            }
            let col = self.col(j);
            for (o, &c) in out.iter_mut().zip(col) {
                *o += c * vj;
            }
        }
        out
    }

    /// Max absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Squared Frobenius (Hilbert-Schmidt) norm.
    pub fn hs_norm_sq(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn trace(&self) -> C64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|j| self[(j, j)]).sum()
    }

    /// `tr(self * other)` without forming the product.
    pub fn trace_mul(&self, other: &CMat) -> C64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += self[(i, j)] * other[(j, i)];
            }
        }
        acc
    }

    /// Deviation of `self` from unitarity: max entry of `self^H self - I`.
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.adjoint_mul(self);
        let mut worst = 0.0f64;
        for c in 0..g.cols {
            for r in 0..g.rows {
                let target = if r == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                worst = worst.max((g[(r, c)] - target).norm());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[c * self.rows + r]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[c * self.rows + r]
    }
}

/// Complex Schur factorization `A = Q T Q^H` via zgees.
///
/// For a normal input the factor `T` is diagonal to machine precision, so
/// the columns of `Q` are orthonormal eigenvectors and `diag(T)` are the
/// eigenvalues.
pub struct Schur {
    pub q: CMat,
    pub t: CMat,
}

pub fn schur(a: &CMat) -> Result<Schur> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut t = a.clone();
    let mut q = CMat::zeros(n, n);
    let mut w = vec![C64::new(0.0, 0.0); n];
    let mut sdim = 0i32;
    let mut info = 0i32;
    let lwork = (4 * n.max(1)) as i32;
    let mut work = vec![C64::new(0.0, 0.0); lwork as usize];
    let mut rwork = vec![0.0f64; n.max(1)];
    let mut bwork = vec![0i32; 1];
    unsafe {
        lapack::zgees(
            b'V',
            b'N',
            None,
            n as i32,
            &mut t.data,
            n.max(1) as i32,
            &mut sdim,
            &mut w,
            &mut q.data,
            n.max(1) as i32,
            &mut work,
            lwork,
            &mut rwork,
            &mut bwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zgees", info });
    }
    Ok(Schur { q, t })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_against_hand_product() {
        let a = CMat::from_fn(2, 2, |r, c| C64::new((r + 2 * c) as f64, 1.0));
        let b = CMat::from_fn(2, 2, |r, c| C64::new(1.0, (r * c) as f64));
        let ab = a.mul(&b);
        for r in 0..2 {
            for c in 0..2 {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..2 {
                    acc += a[(r, k)] * b[(k, c)];
                }
                assert!((ab[(r, c)] - acc).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn schur_of_diagonal_unitary() {
        let n = 5;
        let u = CMat::from_fn(n, n, |r, c| {
            if r == c {
                C64::from_polar(1.0, 2.0 * std::f64::consts::PI * r as f64 / n as f64)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let s = schur(&u).unwrap();
        assert!(s.q.unitarity_defect() < 1e-13);
        let recon = s.q.mul(&s.t).mul(&s.q.adjoint());
        assert!(recon.max_abs_diff(&u) < 1e-13);
    }
}
