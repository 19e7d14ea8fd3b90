//! Gaussian-process models whose Matérn kernel splits exactly into a
//! periodic part (the projection onto a truncated Fourier basis in the
//! kernel's RKHS) and an aperiodic remainder, plus the tools built on that
//! split: likelihood fitting, sub-model prediction, a Monte-Carlo
//! periodicity ratio and a COSOPT baseline.
//!
//! The numerical core is generic over [`Scalar`] (`f32`/`f64`); the
//! `…F64` aliases below fix the common double-precision instantiations.
//! Hyperparameter fitting, scoring and the benchmark work in `f64`.

pub mod bench;
pub mod composite;
pub mod cosopt;
pub mod error;
pub mod fit;
pub mod gp;
pub mod linalg;
pub mod matern;
pub mod periodic;
pub mod periodicity;
pub mod rkhs;
pub mod scalar;

pub use composite::{Component, CompositeKernel};
pub use error::{Error, Result};
pub use gp::{neg2_log_likelihood, Dataset, GpPosterior, JointSample};
pub use matern::{CompositeKernelSpec, MaternSpec, Nu, Trend};
pub use periodic::{FourierBasis, PeriodicKernel, DEFAULT_Q};
pub use rkhs::{CosineForm, CosineTerm, DifferentialOperator, RkhsDomain};
pub use scalar::Scalar;

pub type MaternSpecF64 = MaternSpec<f64>;
pub type CompositeKernelSpecF64 = CompositeKernelSpec<f64>;
pub type CompositeKernelF64 = CompositeKernel<f64>;
pub type FourierBasisF64 = FourierBasis<f64>;
pub type PeriodicKernelF64 = PeriodicKernel<f64>;
pub type CosineFormF64 = CosineForm<f64>;
pub type RkhsDomainF64 = RkhsDomain<f64>;
pub type DatasetF64 = Dataset<f64>;
pub type GpPosteriorF64 = GpPosterior<f64>;
