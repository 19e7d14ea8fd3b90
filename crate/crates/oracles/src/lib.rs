//! Reference computations for the test suites. Nothing here depends on the
//! library under test: inner products are evaluated by adaptive quadrature
//! of the hand-expanded Matérn norms, linear algebra goes through nalgebra.

pub mod dense;
pub mod functions;
pub mod norms;
pub mod quadrature;
