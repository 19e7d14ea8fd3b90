//! Closed-form half-integer Matérn covariances and the composite kernel
//! specification (periodic + aperiodic + trend + noise).

use std::fmt;

use crate::error::{Error, Result};
use crate::periodic::FourierBasis;
use crate::scalar::{c, Scalar};

/// Supported Matérn regularities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Nu {
    Half,
    ThreeHalves,
    FiveHalves,
}

impl Nu {
    pub const ALL: [Nu; 3] = [Nu::Half, Nu::ThreeHalves, Nu::FiveHalves];

    /// Parses `0.5`, `1.5` or `2.5`; anything else is rejected.
    pub fn from_f64(nu: f64) -> Result<Self> {
        match nu {
            x if x == 0.5 => Ok(Nu::Half),
            x if x == 1.5 => Ok(Nu::ThreeHalves),
            x if x == 2.5 => Ok(Nu::FiveHalves),
            other => Err(Error::UnsupportedNu(other)),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Nu::Half => 0.5,
            Nu::ThreeHalves => 1.5,
            Nu::FiveHalves => 2.5,
        }
    }

    /// Order `m = ν + 1/2` of the associated differential operator.
    pub fn order(self) -> usize {
        match self {
            Nu::Half => 1,
            Nu::ThreeHalves => 2,
            Nu::FiveHalves => 3,
        }
    }
}

impl fmt::Display for Nu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nu::Half => f.write_str("1/2"),
            Nu::ThreeHalves => f.write_str("3/2"),
            Nu::FiveHalves => f.write_str("5/2"),
        }
    }
}

impl std::str::FromStr for Nu {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1/2" | "0.5" => Ok(Nu::Half),
            "3/2" | "1.5" => Ok(Nu::ThreeHalves),
            "5/2" | "2.5" => Ok(Nu::FiveHalves),
            other => Err(Error::UnsupportedNu(other.parse().unwrap_or(f64::NAN))),
        }
    }
}

/// Matérn covariance `k_ν(x, y)` with lengthscale `theta` and variance `sigma2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaternSpec<T> {
    nu: Nu,
    theta: T,
    sigma2: T,
}

impl<T: Scalar> MaternSpec<T> {
    pub fn new(nu: Nu, theta: T, sigma2: T) -> Result<Self> {
        if !(theta > T::zero() && theta.is_finite()) {
            return Err(Error::InvalidParameter(format!("lengthscale must be > 0, got {theta}")));
        }
        if !(sigma2 > T::zero() && sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!("variance must be > 0, got {sigma2}")));
        }
        Ok(Self { nu, theta, sigma2 })
    }

    pub fn nu(&self) -> Nu {
        self.nu
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    /// Same regularity and lengthscale with a different variance.
    pub fn with_sigma2(&self, sigma2: T) -> Result<Self> {
        Self::new(self.nu, self.theta, sigma2)
    }

    /// Covariance as a function of the distance `r = |x - y|`.
    #[inline]
    pub fn eval_distance(&self, r: T) -> T {
        let r = r.abs();
        match self.nu {
            Nu::Half => self.sigma2 * (-r / self.theta).exp(),
            Nu::ThreeHalves => {
                let s = c::<T>(3.0).sqrt() * r / self.theta;
                self.sigma2 * (T::one() + s) * (-s).exp()
            }
            Nu::FiveHalves => {
                let s = c::<T>(5.0).sqrt() * r / self.theta;
                self.sigma2 * (T::one() + s + s * s / c(3.0)) * (-s).exp()
            }
        }
    }

    #[inline]
    pub fn eval(&self, x: T, y: T) -> T {
        self.eval_distance(x - y)
    }
}

/// Deterministic mean structure realised through the kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Trend {
    #[default]
    None,
    /// Random intercept: adds the constant `1` to the kernel.
    Constant,
    /// Random intercept and slope: adds `1 + x·y`.
    Linear,
}

impl Trend {
    #[inline]
    pub fn eval<T: Scalar>(self, x: T, y: T) -> T {
        match self {
            Trend::None => T::zero(),
            Trend::Constant => T::one(),
            Trend::Linear => T::one() + x * y,
        }
    }
}

/// Specification of `k = trend + k_p(periodic) + k_a(aperiodic) + τ²δ`.
///
/// The periodic and aperiodic parts share one Fourier basis but carry
/// independent Matérn hyperparameters: the periodic part is the projection
/// of the `periodic` Matérn kernel onto the basis span, the aperiodic part is
/// the orthogonal complement of the `aperiodic` Matérn kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeKernelSpec<T> {
    pub basis: Option<FourierBasis<T>>,
    pub periodic: Option<MaternSpec<T>>,
    pub aperiodic: Option<MaternSpec<T>>,
    pub trend: Trend,
    pub noise_tau2: T,
}

impl<T: Scalar> CompositeKernelSpec<T> {
    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        if self.periodic.is_none() && self.aperiodic.is_none() && self.trend == Trend::None {
            return Err(Error::InvalidParameter(
                "composite kernel needs a periodic, aperiodic or trend term".into(),
            ));
        }
        if (self.periodic.is_some() || self.aperiodic.is_some()) && self.basis.is_none() {
            return Err(Error::InvalidParameter(
                "periodic/aperiodic components need a Fourier basis".into(),
            ));
        }
        if !(self.noise_tau2 >= T::zero() && self.noise_tau2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be >= 0, got {}",
                self.noise_tau2
            )));
        }
        Ok(())
    }

    /// The decomposition of a single Matérn kernel: `k = k_p + k_a`.
    pub fn decomposed(base: MaternSpec<T>, basis: FourierBasis<T>, noise_tau2: T) -> Self {
        Self {
            basis: Some(basis),
            periodic: Some(base),
            aperiodic: Some(base),
            trend: Trend::None,
            noise_tau2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn diagonal_equals_variance() {
        let k = MaternSpec::new(Nu::Half, 2.0, 3.0).unwrap();
        assert_eq!(k.eval(0.7, 0.7), 3.0);
        for nu in Nu::ALL {
            let k = MaternSpec::new(nu, 0.4, 1.7).unwrap();
            assert_eq!(k.eval(-1.2, -1.2), 1.7);
        }
    }

    #[test]
    fn matern52_at_unit_distance() {
        // (1 + √5 + 5/3)·exp(-√5), 30-digit mpmath evaluation
        let k = MaternSpec::new(Nu::FiveHalves, 1.0, 1.0).unwrap();
        assert!((k.eval(0.0, 1.0) - 0.523_994_108_831_820_3f64).abs() < 1e-15);
    }

    #[test]
    fn decays_to_zero() {
        let k = MaternSpec::new(Nu::ThreeHalves, 1.0, 1.0).unwrap();
        let mut prev = k.eval_distance(0.0);
        for r in [0.5, 1.0, 2.0, 5.0, 10.0, 50.0] {
            let v = k.eval_distance(r);
            assert!(v < prev && v >= 0.0);
            prev = v;
        }
        assert!(k.eval_distance(800.0) < 1e-300);
    }

    #[test]
    fn half_is_exponential() {
        let k = MaternSpec::new(Nu::Half, 0.3, 2.0).unwrap();
        for r in [0.0, 0.1, 0.77, 3.0] {
            assert_eq!(k.eval_distance(r), 2.0 * (-r / 0.3f64).exp());
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(Nu::from_f64(3.5), Err(Error::UnsupportedNu(_))));
        assert!(matches!(Nu::from_f64(1.0), Err(Error::UnsupportedNu(_))));
        assert!(MaternSpec::new(Nu::Half, 0.0, 1.0).is_err());
        assert!(MaternSpec::new(Nu::Half, 1.0, -1.0).is_err());
        assert!(MaternSpec::new(Nu::Half, f64::NAN, 1.0).is_err());
        assert_eq!("3/2".parse::<Nu>().unwrap(), Nu::ThreeHalves);
        assert!("7/2".parse::<Nu>().is_err());
    }

    #[test]
    fn composite_spec_validation() {
        let empty = CompositeKernelSpec::<f64> {
            basis: None,
            periodic: None,
            aperiodic: None,
            trend: Trend::None,
            noise_tau2: 0.1,
        };
        assert!(empty.validate().is_err());
        let trend = CompositeKernelSpec { trend: Trend::Linear, ..empty.clone() };
        assert!(trend.validate().is_ok());
        let neg = CompositeKernelSpec { noise_tau2: -1.0, ..trend.clone() };
        assert!(neg.validate().is_err());
        let no_basis = CompositeKernelSpec {
            periodic: Some(MaternSpec::new(Nu::Half, 1.0, 1.0).unwrap()),
            ..trend
        };
        assert!(no_basis.validate().is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let k = MaternSpec::<f32>::new(Nu::FiveHalves, 1.0, 1.0).unwrap();
        assert!((k.eval(0.0, 1.0) - 0.523_994_1).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn symmetric_stationary_and_scaled(
            x in -10.0..10.0f64, y in -10.0..10.0f64, shift in -5.0..5.0f64,
            theta in 0.05..5.0f64, scale in 0.1..10.0f64, nu_idx in 0usize..3,
        ) {
            let nu = Nu::ALL[nu_idx];
            let k = MaternSpec::new(nu, theta, 1.0).unwrap();
            let ks = MaternSpec::new(nu, theta, scale).unwrap();
            prop_assert_eq!(k.eval(x, y), k.eval(y, x));
            let moved = k.eval(x + shift, y + shift);
            prop_assert!((moved - k.eval(x, y)).abs() <= 1e-12);
            prop_assert!((ks.eval(x, y) - scale * k.eval(x, y)).abs() <= 1e-14 * scale);
        }
    }
}
