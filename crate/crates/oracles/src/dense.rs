//! Dense linear-algebra oracles built on nalgebra.

use nalgebra::{DMatrix, DVector};

pub fn to_dmatrix(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, f)
}

/// `n log 2π + log det K + yᵀ K⁻¹ y` through LU determinant and explicit inverse.
pub fn neg2_log_likelihood(k: &DMatrix<f64>, y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let det = k.clone().lu().determinant();
    let inv = k.clone().try_inverse().expect("invertible");
    let yv = DVector::from_column_slice(y);
    n * (2.0 * std::f64::consts::PI).ln() + det.ln() + (yv.transpose() * inv * &yv)[(0, 0)]
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.min()
}

/// Solves `A x = b` by LU.
pub fn solve(a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    a.clone()
        .lu()
        .solve(&DVector::from_column_slice(b))
        .expect("non-singular")
        .iter()
        .copied()
        .collect()
}

/// Inverse of a 2×2 matrix written out by hand.
pub fn inverse_2x2(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
}
