//! Small dense linear-algebra kernel: row-major matrices and a Cholesky
//! factorisation with an escalating diagonal-jitter ladder.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::{c, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data. Panics if the length mismatches.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length");
        Self { rows, cols, data }
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
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> T {
        self.diagonal().into_iter().sum()
    }

    pub fn add_diagonal(&mut self, value: T) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += value;
        }
    }

    pub fn scale(&mut self, factor: T) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn mat_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ · v`.
    pub fn tr_mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (k, &vk) in v.iter().enumerate() {
            axpy(vk, self.row(k), &mut out);
        }
        out
    }

    /// `selfᵀ · other` without materialising the transpose.
    pub fn tr_mul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.rows, other.rows, "inner dimension");
        let mut out = Matrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let a = self.row(k);
            let b = other.row(k);
            for (i, &aki) in a.iter().enumerate() {
                if aki == T::zero() {
                    continue;
                }
                axpy(aki, b, out.row_mut(i));
            }
        }
        out
    }

    pub fn mul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, other.rows, "inner dimension");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == T::zero() {
                    continue;
                }
                let (src, dst) = (other.row(k), &mut out.data[i * other.cols..(i + 1) * other.cols]);
                axpy(aik, src, dst);
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Matrix<T>) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Relative jitter ladder used for observation covariance matrices.
pub const GP_JITTER_LADDER: [f64; 6] = [0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8];

/// Lower-triangular Cholesky factor `A + jitter·I = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    l: Matrix<T>,
    jitter: T,
}

impl<T: Scalar> Cholesky<T> {
    /// Plain factorisation; `None` if a pivot is not strictly positive.
    pub fn try_new(a: &Matrix<T>) -> Option<Self> {
        factor(a, T::zero()).map(|l| Self { l, jitter: T::zero() })
    }

    /// Tries each relative jitter in `ladder` (scaled by the mean diagonal)
    /// until the factorisation succeeds.
    pub fn with_jitter_ladder(a: &Matrix<T>, ladder: &[f64], what: &'static str) -> Result<Self> {
        assert_eq!(a.rows, a.cols, "square matrix");
        let n = a.rows;
        let cap = ladder.last().copied().unwrap_or(0.0);
        if n == 0 {
            return Err(Error::InvalidParameter(format!("{what}: empty matrix")));
        }
        let scale = a.diagonal().into_iter().map(|d| d.abs()).sum::<T>() / T::from_usize_lossy(n);
        if !scale.is_finite() {
            return Err(Error::FactorizationFailure { what, cap });
        }
        for &rel in ladder {
            let jitter = c::<T>(rel) * scale;
            if let Some(l) = factor(a, jitter) {
                return Ok(Self { l, jitter });
            }
        }
        Err(Error::FactorizationFailure { what, cap })
    }

    /// Wraps an existing lower factor. The caller guarantees it is lower
    /// triangular with a positive diagonal.
    pub(crate) fn from_parts(l: Matrix<T>, jitter: T) -> Self {
        Self { l, jitter }
    }

    pub fn dim(&self) -> usize {
        self.l.rows
    }

    /// Absolute diagonal jitter that was added.
    pub fn jitter(&self) -> T {
        self.jitter
    }

    pub fn lower(&self) -> &Matrix<T> {
        &self.l
    }

    /// Solves `L x = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [T]) {
        let n = self.dim();
        assert_eq!(b.len(), n);
        for i in 0..n {
            let row = self.l.row(i);
            let s = b[i] - dot(&row[..i], &b[..i]);
            b[i] = s / row[i];
        }
    }

    /// Solves `Lᵀ x = b` in place.
    pub fn solve_upper_in_place(&self, b: &mut [T]) {
        let n = self.dim();
        assert_eq!(b.len(), n);
        for i in (0..n).rev() {
            let row = self.l.row(i);
            b[i] /= row[i];
            let xi = b[i];
            for k in 0..i {
                b[k] -= row[k] * xi;
            }
        }
    }

    /// Solves `(L Lᵀ) x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        x
    }

    /// `L⁻¹ B` for a right-hand side with `dim()` rows.
    pub fn solve_lower_matrix(&self, b: &Matrix<T>) -> Matrix<T> {
        let n = self.dim();
        assert_eq!(b.rows, n);
        let mut x = b.clone();
        let m = b.cols;
        for i in 0..n {
            let lrow = self.l.row(i);
            let (done, rest) = x.data.split_at_mut(i * m);
            let xi = &mut rest[..m];
            for (k, &lik) in lrow[..i].iter().enumerate() {
                if lik != T::zero() {
                    axpy(-lik, &done[k * m..(k + 1) * m], xi);
                }
            }
            let inv = T::one() / lrow[i];
            xi.iter_mut().for_each(|v| *v *= inv);
        }
        x
    }

    /// `log |L Lᵀ|`.
    pub fn log_det(&self) -> T {
        let two = c::<T>(2.0);
        self.l.diagonal().into_iter().map(|d| two * d.ln()).sum()
    }

    /// `L z`, the map used to colour standard normal draws.
    pub fn lower_mul(&self, z: &[T]) -> Vec<T> {
        (0..self.dim())
            .map(|i| dot(&self.l.row(i)[..=i], &z[..=i]))
            .collect()
    }
}

fn factor<T: Scalar>(a: &Matrix<T>, jitter: T) -> Option<Matrix<T>> {
    let n = a.rows;
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s = a[(i, j)] + if i == j { jitter } else { T::zero() };
            let (li, lj) = (l.row(i), l.row(j));
            let s = s - dot(&li[..j], &lj[..j]);
            if i == j {
                if !(s > T::zero()) || !s.is_finite() {
                    return None;
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd3() -> Matrix<f64> {
        Matrix::from_row_major(3, 3, vec![4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0])
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = spd3();
        let ch = Cholesky::try_new(&a).unwrap();
        let l = ch.lower();
        let rebuilt = l.mul(&l.transpose());
        assert!(rebuilt.max_abs_diff(&a) < 1e-14);
        assert_eq!(ch.jitter(), 0.0);
    }

    #[test]
    fn solve_and_log_det() {
        let a = spd3();
        let ch = Cholesky::try_new(&a).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = ch.solve(&b);
        let ax = a.mat_vec(&x);
        for (u, v) in ax.iter().zip(&b) {
            assert!((u - v).abs() < 1e-13);
        }
        // det = 4(15-1) - 2(6-0.6) + 0.6(2-3)
        let det: f64 = 4.0 * 14.0 - 2.0 * 5.4 + 0.6 * -1.0;
        assert!((ch.log_det() - det.ln()).abs() < 1e-13);
    }

    #[test]
    fn lower_matrix_solve_matches_columnwise() {
        let a = spd3();
        let ch = Cholesky::try_new(&a).unwrap();
        let b = Matrix::from_fn(3, 2, |i, j| (i as f64 + 1.0) * (j as f64 - 0.5));
        let x = ch.solve_lower_matrix(&b);
        for j in 0..2 {
            let mut col: Vec<f64> = (0..3).map(|i| b[(i, j)]).collect();
            ch.solve_lower_in_place(&mut col);
            for i in 0..3 {
                assert!((x[(i, j)] - col[i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn jitter_rescues_rank_deficient_matrix() {
        // rank one
        let v = [1.0, 2.0, 3.0];
        let a = Matrix::from_fn(3, 3, |i, j| v[i] * v[j]);
        assert!(Cholesky::try_new(&a).is_none());
        let ch = Cholesky::with_jitter_ladder(&a, &[0.0, 1e-10, 1e-8], "test").unwrap();
        assert!(ch.jitter() > 0.0);
        assert!(ch.jitter() <= 1e-8 * 14.0 / 3.0 * (1.0 + 1e-12));
    }

    #[test]
    fn indefinite_matrix_fails_after_cap() {
        let a = Matrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 1.0]);
        let err = Cholesky::with_jitter_ladder(&a, &GP_JITTER_LADDER, "K").unwrap_err();
        assert!(matches!(err, Error::FactorizationFailure { what: "K", .. }));
    }

    #[test]
    fn tr_mul_matches_explicit_transpose() {
        let a = Matrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64 * 0.3 - 1.0);
        let b = Matrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64);
        let expected = a.transpose().mul(&b);
        assert!(a.tr_mul(&b).max_abs_diff(&expected) < 1e-14);
    }
}
