//! Built form of [`CompositeKernelSpec`]: the Fourier Gram matrices of the
//! periodic and aperiodic parts are factorised once and reused for every
//! evaluation.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::matern::{CompositeKernelSpec, Trend};
use crate::periodic::PeriodicKernel;
use crate::rkhs::RkhsDomain;
use crate::scalar::Scalar;

/// Additive GP component that can be queried separately.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Component {
    Periodic,
    Aperiodic,
}

impl Component {
    pub fn name(self) -> &'static str {
        match self {
            Component::Periodic => "periodic",
            Component::Aperiodic => "aperiodic",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CompositeKernel<T> {
    spec: CompositeKernelSpec<T>,
    periodic: Option<PeriodicKernel<T>>,
    aperiodic: Option<PeriodicKernel<T>>,
}

impl<T: Scalar> CompositeKernel<T> {
    /// Builds every sub-kernel of `spec` on the RKHS domain `dom`.
    pub fn build(spec: CompositeKernelSpec<T>, dom: RkhsDomain<T>) -> Result<Self> {
        spec.validate()?;
        let make = |base| {
            let basis = spec.basis.clone().expect("validated basis");
            PeriodicKernel::build(basis, base, dom)
        };
        let periodic = spec.periodic.map(make).transpose()?;
        let aperiodic = match (spec.aperiodic, &periodic) {
            // shared hyperparameters: reuse the factorisation
            (Some(a), Some(p)) if a == *p.base() => Some(p.clone()),
            (Some(a), _) => Some(make(a)?),
            (None, _) => None,
        };
        Ok(Self { spec, periodic, aperiodic })
    }

    /// Assembles a kernel from already-built sub-kernels. Their bases and
    /// Matérn specs must agree with `spec`.
    pub fn from_parts(
        spec: CompositeKernelSpec<T>,
        periodic: Option<PeriodicKernel<T>>,
        aperiodic: Option<PeriodicKernel<T>>,
    ) -> Result<Self> {
        spec.validate()?;
        let agrees = |pk: &Option<PeriodicKernel<T>>, base: &Option<_>| match (pk, base) {
            (Some(pk), Some(b)) => pk.base() == b && Some(pk.basis()) == spec.basis.as_ref(),
            (None, None) => true,
            _ => false,
        };
        if !agrees(&periodic, &spec.periodic) || !agrees(&aperiodic, &spec.aperiodic) {
            return Err(Error::InvalidParameter(
                "sub-kernels do not match the composite specification".into(),
            ));
        }
        Ok(Self { spec, periodic, aperiodic })
    }

    pub fn spec(&self) -> &CompositeKernelSpec<T> {
        &self.spec
    }

    pub fn periodic_kernel(&self) -> Option<&PeriodicKernel<T>> {
        self.periodic.as_ref()
    }

    pub fn aperiodic_kernel(&self) -> Option<&PeriodicKernel<T>> {
        self.aperiodic.as_ref()
    }

    pub fn has(&self, which: Component) -> bool {
        match which {
            Component::Periodic => self.periodic.is_some(),
            Component::Aperiodic => self.aperiodic.is_some(),
        }
    }

    pub fn noise_tau2(&self) -> T {
        self.spec.noise_tau2
    }

    pub fn trend(&self) -> Trend {
        self.spec.trend
    }

    /// Largest jitter added to any Fourier Gram matrix.
    pub fn gram_jitter(&self) -> T {
        [&self.periodic, &self.aperiodic]
            .into_iter()
            .flatten()
            .map(|pk| pk.jitter())
            .fold(T::zero(), T::max)
    }

    pub fn component_eval(&self, which: Component, x: T, y: T) -> Result<T> {
        match which {
            Component::Periodic => self.periodic.as_ref().map(|pk| pk.k_p(x, y)),
            Component::Aperiodic => self.aperiodic.as_ref().map(|pk| pk.k_a(x, y)),
        }
        .ok_or(Error::MissingComponent(which.name()))
    }

    /// `k(x, y)`; the noise term only applies when both arguments refer to
    /// the same observation.
    pub fn eval(&self, x: T, y: T, same_index: bool) -> T {
        let mut k = self.spec.trend.eval(x, y);
        if let Some(pk) = &self.periodic {
            k += pk.k_p(x, y);
        }
        if let Some(pk) = &self.aperiodic {
            k += pk.k_a(x, y);
        }
        if same_index {
            k += self.spec.noise_tau2;
        }
        k
    }

    pub fn component_matrix(&self, which: Component, xs: &[T], ys: &[T]) -> Result<Matrix<T>> {
        match which {
            Component::Periodic => self.periodic.as_ref().map(|pk| pk.k_p_matrix(xs, ys)),
            Component::Aperiodic => self.aperiodic.as_ref().map(|pk| pk.k_a_matrix(xs, ys)),
        }
        .ok_or(Error::MissingComponent(which.name()))
    }

    pub fn trend_matrix(&self, xs: &[T], ys: &[T]) -> Matrix<T> {
        let trend = self.spec.trend;
        Matrix::from_fn(xs.len(), ys.len(), |i, j| trend.eval(xs[i], ys[j]))
    }

    /// Noise-free covariance between two point sets.
    pub fn cross_matrix(&self, xs: &[T], ys: &[T]) -> Matrix<T> {
        let mut m = self.trend_matrix(xs, ys);
        for which in [Component::Periodic, Component::Aperiodic] {
            if let Ok(part) = self.component_matrix(which, xs, ys) {
                add_assign(&mut m, &part);
            }
        }
        m
    }

    /// Covariance of the observations at `xs`, noise on the diagonal.
    pub fn covariance_matrix(&self, xs: &[T]) -> Matrix<T> {
        let mut k = self.cross_matrix(xs, xs);
        // exact symmetry regardless of summation order
        for i in 0..xs.len() {
            for j in 0..i {
                let v = k[(i, j)];
                k[(j, i)] = v;
            }
        }
        k.add_diagonal(self.spec.noise_tau2);
        k
    }
}

pub(crate) fn add_assign<T: Scalar>(a: &mut Matrix<T>, b: &Matrix<T>) {
    assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
    for i in 0..a.rows() {
        for (x, &y) in a.row_mut(i).iter_mut().zip(b.row(i)) {
            *x += y;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matern::{MaternSpec, Nu};
    use crate::periodic::FourierBasis;

    fn base_spec() -> CompositeKernelSpec<f64> {
        CompositeKernelSpec {
            basis: None,
            periodic: None,
            aperiodic: None,
            trend: Trend::None,
            noise_tau2: 0.0,
        }
    }

    fn dom() -> RkhsDomain<f64> {
        RkhsDomain::new(0.0, 4.0).unwrap()
    }

    #[test]
    fn trend_only() {
        let k = CompositeKernel::build(CompositeKernelSpec { trend: Trend::Linear, ..base_spec() }, dom())
            .unwrap();
        assert_eq!(k.eval(2.0, 3.0, false), 7.0);
        let k = CompositeKernel::build(CompositeKernelSpec { trend: Trend::Constant, ..base_spec() }, dom())
            .unwrap();
        assert_eq!(k.eval(2.0, 3.0, false), 1.0);
    }

    #[test]
    fn noise_is_index_based() {
        let spec = CompositeKernelSpec { trend: Trend::Constant, noise_tau2: 0.5, ..base_spec() };
        let k = CompositeKernel::build(spec, dom()).unwrap();
        assert_eq!(k.eval(1.0, 1.0, true) - k.eval(1.0, 1.0, false), 0.5);
        // duplicated inputs are separate observations
        let cov = k.covariance_matrix(&[1.0, 1.0]);
        assert_eq!(cov[(0, 1)], 1.0);
        assert_eq!(cov[(0, 0)], 1.5);
    }

    #[test]
    fn full_model_is_termwise_sum() {
        let basis = FourierBasis::new(6, 1.3).unwrap();
        let p = MaternSpec::new(Nu::ThreeHalves, 0.8, 1.4).unwrap();
        let a = MaternSpec::new(Nu::FiveHalves, 2.0, 0.3).unwrap();
        let spec = CompositeKernelSpec {
            basis: Some(basis.clone()),
            periodic: Some(p),
            aperiodic: Some(a),
            trend: Trend::Linear,
            noise_tau2: 0.05,
        };
        let k = CompositeKernel::build(spec, dom()).unwrap();
        let pk_p = PeriodicKernel::build(basis.clone(), p, dom()).unwrap();
        let pk_a = PeriodicKernel::build(basis, a, dom()).unwrap();
        for &(x, y) in &[(0.3, 3.1), (1.0, 1.0), (2.5, 0.2)] {
            let expected = 1.0 + x * y + pk_p.k_p(x, y) + (a.eval(x, y) - pk_a.k_p(x, y));
            assert!((k.eval(x, y, false) - expected).abs() < 1e-13);
            assert!((k.eval(x, y, true) - expected - 0.05).abs() < 1e-13);
        }
        let xs = [0.3, 1.0, 2.5];
        let cov = k.covariance_matrix(&xs);
        assert!(cov.is_symmetric());
        for i in 0..3 {
            for j in 0..3 {
                assert!((cov[(i, j)] - k.eval(xs[i], xs[j], i == j)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn missing_component_is_reported() {
        let k = CompositeKernel::build(CompositeKernelSpec { trend: Trend::Constant, ..base_spec() }, dom())
            .unwrap();
        assert_eq!(
            k.component_eval(Component::Periodic, 0.0, 1.0),
            Err(Error::MissingComponent("periodic"))
        );
    }

    #[test]
    fn shared_hyperparameters_recover_matern() {
        let basis = FourierBasis::new(5, 2.0).unwrap();
        let m = MaternSpec::new(Nu::ThreeHalves, 0.7, 1.0).unwrap();
        let k = CompositeKernel::build(CompositeKernelSpec::decomposed(m, basis, 0.0), dom()).unwrap();
        for &(x, y) in &[(0.0, 0.5), (1.2, 3.9)] {
            assert!((k.eval(x, y, false) - m.eval(x, y)).abs() < 1e-14);
        }
    }
}
