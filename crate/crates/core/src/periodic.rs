//! Periodic sub-kernel `k_p = Fᵀ G⁻¹ F` of a Matérn kernel, where `F` is a
//! truncated Fourier basis and `G` its Gram matrix in the Matérn RKHS, and
//! the aperiodic complement `k_a = k − k_p`.

use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Matrix};
use crate::matern::MaternSpec;
use crate::rkhs::{gram_matrix, matern_operator, CosineForm, RkhsDomain};
use crate::scalar::{c, Scalar};

/// Default truncation order of the Fourier basis.
pub const DEFAULT_Q: usize = 20;

/// Relative jitter ladder for the Gram matrix `G`; the cap is
/// `1e-6 · trace(G) / 2q`.
pub const GRAM_JITTER_LADDER: [f64; 8] = [0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// `sin(2πkx/λ), cos(2πkx/λ)` for `k = 1..=q`, in that interleaved order.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierBasis<T> {
    q: usize,
    lambda: T,
    functions: Vec<CosineForm<T>>,
}

impl<T: Scalar> FourierBasis<T> {
    pub fn new(q: usize, lambda: T) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameter("Fourier order q must be >= 1".into()));
        }
        if !(lambda > T::zero() && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("period must be > 0, got {lambda}")));
        }
        let functions = (1..=q)
            .flat_map(|k| {
                let omega = T::TAU() * T::from_usize_lossy(k) / lambda;
                [CosineForm::sine(T::one(), omega), CosineForm::cosine(T::one(), omega, T::zero())]
            })
            .collect();
        Ok(Self { q, lambda, functions })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// Same truncation order, different period.
    pub fn with_lambda(&self, lambda: T) -> Result<Self> {
        Self::new(self.q, lambda)
    }

    pub fn len(&self) -> usize {
        2 * self.q
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn functions(&self) -> &[CosineForm<T>] {
        &self.functions
    }

    pub fn omega(&self, k: usize) -> T {
        T::TAU() * T::from_usize_lossy(k) / self.lambda
    }

    /// `F(x)`.
    pub fn eval(&self, x: T) -> Vec<T> {
        let mut out = Vec::with_capacity(self.len());
        for k in 1..=self.q {
            let (s, co) = (self.omega(k) * x).sin_cos();
            out.push(s);
            out.push(co);
        }
        out
    }
}

/// Built periodic kernel: basis, base Matérn, domain and the factorised Gram
/// matrix of the basis.
#[derive(Clone, Debug)]
pub struct PeriodicKernel<T> {
    basis: FourierBasis<T>,
    base: MaternSpec<T>,
    dom: RkhsDomain<T>,
    gram: Matrix<T>,
    factor: Cholesky<T>,
}

impl<T: Scalar> PeriodicKernel<T> {
    /// Computes `G_ij = ⟨F_i, F_j⟩` exactly and factorises it.
    pub fn build(basis: FourierBasis<T>, base: MaternSpec<T>, dom: RkhsDomain<T>) -> Result<Self> {
        let gram = gram_matrix(&matern_operator(&base), &dom, basis.functions());
        let factor = Cholesky::with_jitter_ladder(&gram, &GRAM_JITTER_LADDER, "Fourier Gram matrix")?;
        Ok(Self { basis, base, dom, gram, factor })
    }

    /// Same kernel with the base variance replaced. `G` scales as `1/σ²`,
    /// so no refactorisation is needed.
    pub fn with_variance(&self, sigma2: T) -> Result<Self> {
        let base = self.base.with_sigma2(sigma2)?;
        let ratio = self.base.sigma2() / sigma2;
        let mut gram = self.gram.clone();
        gram.scale(ratio);
        let l = {
            let mut l = self.factor.lower().clone();
            l.scale(ratio.sqrt());
            l
        };
        let factor = Cholesky::from_parts(l, self.factor.jitter() * ratio);
        Ok(Self { basis: self.basis.clone(), base, dom: self.dom, gram, factor })
    }

    pub fn basis(&self) -> &FourierBasis<T> {
        &self.basis
    }

    pub fn base(&self) -> &MaternSpec<T> {
        &self.base
    }

    pub fn domain(&self) -> &RkhsDomain<T> {
        &self.dom
    }

    pub fn gram(&self) -> &Matrix<T> {
        &self.gram
    }

    pub fn gram_factor(&self) -> &Cholesky<T> {
        &self.factor
    }

    /// Diagonal jitter added to `G` before factorisation.
    pub fn jitter(&self) -> T {
        self.factor.jitter()
    }

    /// `L⁻¹ F(x)` where `G = L Lᵀ`; then `k_p(x, y) = w(x)·w(y)`.
    pub fn whitened(&self, x: T) -> Vec<T> {
        let mut w = self.basis.eval(x);
        self.factor.solve_lower_in_place(&mut w);
        w
    }

    /// Whitened features of many points as a `2q × n` matrix.
    pub fn whitened_matrix(&self, xs: &[T]) -> Matrix<T> {
        let n = self.basis.len();
        let mut f = Matrix::zeros(n, xs.len());
        for (j, &x) in xs.iter().enumerate() {
            for (i, v) in self.basis.eval(x).into_iter().enumerate() {
                f[(i, j)] = v;
            }
        }
        self.factor.solve_lower_matrix(&f)
    }

    /// Coefficients `G⁻¹ F(x)` of `k_p(x, ·)` in the basis.
    pub fn section_coefficients(&self, x: T) -> Vec<T> {
        self.factor.solve(&self.basis.eval(x))
    }

    pub fn k_p(&self, x: T, y: T) -> T {
        dot(&self.whitened(x), &self.whitened(y))
    }

    pub fn k_a(&self, x: T, y: T) -> T {
        self.base.eval(x, y) - self.k_p(x, y)
    }

    /// `k_p` Gram/cross matrix between two point sets.
    pub fn k_p_matrix(&self, xs: &[T], ys: &[T]) -> Matrix<T> {
        let wx = self.whitened_matrix(xs);
        let wy = self.whitened_matrix(ys);
        wx.tr_mul(&wy)
    }

    /// `k_a` Gram/cross matrix between two point sets.
    pub fn k_a_matrix(&self, xs: &[T], ys: &[T]) -> Matrix<T> {
        let mut m = self.k_p_matrix(xs, ys);
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in ys.iter().enumerate() {
                m[(i, j)] = self.base.eval(x, y) - m[(i, j)];
            }
        }
        m
    }

    /// Cap on the Gram jitter, `1e-6 · trace(G) / 2q`.
    pub fn jitter_cap(&self) -> T {
        c::<T>(1e-6) * self.gram.trace() / T::from_usize_lossy(self.basis.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matern::Nu;
    use std::f64::consts::PI;

    fn kernel(nu: Nu, theta: f64, q: usize, lambda: f64, a: f64, b: f64) -> PeriodicKernel<f64> {
        PeriodicKernel::build(
            FourierBasis::new(q, lambda).unwrap(),
            MaternSpec::new(nu, theta, 1.0).unwrap(),
            RkhsDomain::new(a, b).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn basis_layout() {
        let b = FourierBasis::new(3, 2.0).unwrap();
        assert_eq!(b.len(), 6);
        let f = b.eval(0.3);
        assert!((f[0] - (PI * 0.3).sin()).abs() < 1e-15);
        assert!((f[5] - (3.0 * PI * 0.3).cos()).abs() < 1e-15);
        for (i, form) in b.functions().iter().enumerate() {
            assert!((form.eval(0.3) - f[i]).abs() < 1e-14);
            assert!(form.terms()[0].omega > 0.0);
        }
        assert!(FourierBasis::new(0, 1.0).is_err());
        assert!(FourierBasis::<f64>::new(2, -1.0).is_err());
    }

    #[test]
    fn gram_is_exactly_symmetric() {
        let pk = kernel(Nu::FiveHalves, 0.7, 6, 1.3, -0.4, 2.9);
        assert!(pk.gram().is_symmetric());
    }

    #[test]
    fn gram_not_diagonal_on_whole_periods() {
        let pk = kernel(Nu::ThreeHalves, 1.0, 3, 2.0 * PI, 0.0, 4.0 * PI);
        let g = pk.gram();
        let off = (0..6)
            .flat_map(|i| (0..6).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| g[(i, j)].abs())
            .fold(0.0, f64::max);
        assert!(off > 1e-3, "largest off-diagonal entry {off}");
    }

    #[test]
    fn k_p_is_periodic_and_matches_dense_solve() {
        let lambda = 1.7;
        let pk = kernel(Nu::ThreeHalves, 0.9, 5, lambda, 0.0, 4.0);
        for &(x, y) in &[(0.2, 1.1), (3.3, 0.7), (-0.5, 2.2)] {
            let v = pk.k_p(x, y);
            assert!((pk.k_p(x + lambda, y) - v).abs() < 1e-12 * v.abs().max(1.0));
            assert!((pk.k_p(x, y) - pk.k_p(y, x)).abs() < 1e-15);
            let coef = pk.section_coefficients(y);
            let direct = dot(&pk.basis().eval(x), &coef);
            assert!((direct - v).abs() <= 1e-12 * v.abs().max(1e-300));
        }
    }

    #[test]
    fn decomposition_sums_to_base() {
        let pk = kernel(Nu::Half, 0.5, 4, 1.0, 0.0, 3.0);
        for &(x, y) in &[(0.1, 0.2), (1.5, 2.9), (2.0, 2.0)] {
            let total = pk.k_p(x, y) + pk.k_a(x, y);
            assert!((total - pk.base().eval(x, y)).abs() < 1e-15);
        }
    }

    #[test]
    fn variance_rescaling_matches_rebuild() {
        let pk = kernel(Nu::FiveHalves, 1.1, 4, 2.0, 0.0, 5.0);
        let scaled = pk.with_variance(3.5).unwrap();
        let rebuilt = PeriodicKernel::build(
            pk.basis().clone(),
            MaternSpec::new(Nu::FiveHalves, 1.1, 3.5).unwrap(),
            *pk.domain(),
        )
        .unwrap();
        for &(x, y) in &[(0.3, 4.1), (2.2, 2.2)] {
            let (a, b) = (scaled.k_p(x, y), rebuilt.k_p(x, y));
            assert!((a - b).abs() < 1e-12 * b.abs().max(1e-12));
            assert!((a - 3.5 * pk.k_p(x, y)).abs() < 1e-12 * a.abs().max(1e-12));
        }
    }

    #[test]
    fn matrix_forms_match_pointwise() {
        let pk = kernel(Nu::ThreeHalves, 0.6, 5, 1.0, 0.0, 3.0);
        let xs = [0.1, 0.9, 2.4];
        let ys = [0.5, 2.95];
        let kp = pk.k_p_matrix(&xs, &ys);
        let ka = pk.k_a_matrix(&xs, &ys);
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in ys.iter().enumerate() {
                assert!((kp[(i, j)] - pk.k_p(x, y)).abs() < 1e-14);
                assert!((ka[(i, j)] - pk.k_a(x, y)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn screening_defaults_need_little_jitter() {
        // q = 20, ν = 3/2, 26h..74h span, lengthscale and period bounds of the
        // gene-screening profile
        for &theta in &[10.0, 25.0, 60.0] {
            for &lambda in &[20.0, 24.0, 28.0] {
                let pk = kernel(Nu::ThreeHalves, theta, DEFAULT_Q, lambda, 26.0, 74.0);
                assert!(pk.jitter() <= pk.jitter_cap());
            }
        }
    }
}
