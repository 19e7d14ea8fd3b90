//! Matérn RKHS inner products on `[a, b]`, written out term by term and
//! integrated numerically.

use crate::functions::{MaternNu, Smooth};
use crate::quadrature::integrate_with_breaks;

pub const QUAD_REL_TOL: f64 = 1e-13;

/// `⟨g, h⟩` in the RKHS of the Matérn kernel `(ν, θ, σ²)` restricted to `[a, b]`.
pub fn matern_inner(
    nu: MaternNu,
    theta: f64,
    sigma2: f64,
    a: f64,
    b: f64,
    g: &dyn Smooth,
    h: &dyn Smooth,
) -> f64 {
    let mut breaks = g.breaks();
    breaks.extend(h.breaks());
    match nu {
        MaternNu::Half => {
            let lg = |t: f64| g.value(t) / theta + g.deriv(t, 1);
            let lh = |t: f64| h.value(t) / theta + h.deriv(t, 1);
            let integral = integrate_with_breaks(|t| lg(t) * lh(t), a, b, &breaks, QUAD_REL_TOL);
            theta / (2.0 * sigma2) * integral + g.value(a) * h.value(a) / sigma2
        }
        MaternNu::ThreeHalves => {
            let s3 = 3f64.sqrt();
            let op = |f: &dyn Smooth, t: f64| {
                3.0 / (theta * theta) * f.value(t) + 2.0 * s3 / theta * f.deriv(t, 1) + f.deriv(t, 2)
            };
            let integral = integrate_with_breaks(|t| op(g, t) * op(h, t), a, b, &breaks, QUAD_REL_TOL);
            theta.powi(3) / (12.0 * s3 * sigma2) * integral
                + g.value(a) * h.value(a) / sigma2
                + theta * theta / (3.0 * sigma2) * g.deriv(a, 1) * h.deriv(a, 1)
        }
        MaternNu::FiveHalves => {
            let s5 = 5f64.sqrt();
            let pre = (3.0 * theta.powi(5) / (400.0 * s5 * sigma2)).sqrt();
            let op = |f: &dyn Smooth, t: f64| {
                pre * (5.0 * s5 / theta.powi(3) * f.value(t)
                    + 15.0 / (theta * theta) * f.deriv(t, 1)
                    + 3.0 * s5 / theta * f.deriv(t, 2)
                    + f.deriv(t, 3))
            };
            let integral = integrate_with_breaks(|t| op(g, t) * op(h, t), a, b, &breaks, QUAD_REL_TOL);
            let (g0, g1, g2) = (g.value(a), g.deriv(a, 1), g.deriv(a, 2));
            let (h0, h1, h2) = (h.value(a), h.deriv(a, 1), h.deriv(a, 2));
            integral
                + 9.0 / (8.0 * sigma2) * g0 * h0
                + 9.0 * theta.powi(4) / (200.0 * sigma2) * g2 * h2
                + 3.0 * theta * theta / (5.0 * sigma2) * (g1 * h1 + g2 * h0 / 8.0 + g0 * h2 / 8.0)
        }
    }
}
