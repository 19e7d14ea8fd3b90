//! Test functions with closed-form derivatives.

/// A real function on the line with derivatives of every order needed.
pub trait Smooth {
    fn deriv(&self, t: f64, order: usize) -> f64;

    fn value(&self, t: f64) -> f64 {
        self.deriv(t, 0)
    }

    /// Points where some derivative is discontinuous.
    fn breaks(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// `Σ amp · cos(ω t + φ)`.
#[derive(Clone, Debug)]
pub struct CosSum(pub Vec<(f64, f64, f64)>);

impl Smooth for CosSum {
    fn deriv(&self, t: f64, order: usize) -> f64 {
        self.0
            .iter()
            .map(|&(amp, w, ph)| {
                let u = w * t + ph;
                let base = match order % 4 {
                    0 => u.cos(),
                    1 => -u.sin(),
                    2 => -u.cos(),
                    _ => u.sin(),
                };
                amp * w.powi(order as i32) * base
            })
            .sum()
    }
}

/// Regularity of a half-integer Matérn kernel, encoded as `2ν`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaternNu {
    Half,
    ThreeHalves,
    FiveHalves,
}

impl MaternNu {
    pub const ALL: [MaternNu; 3] = [MaternNu::Half, MaternNu::ThreeHalves, MaternNu::FiveHalves];

    fn rate(self, theta: f64) -> f64 {
        match self {
            MaternNu::Half => 1.0 / theta,
            MaternNu::ThreeHalves => 3f64.sqrt() / theta,
            MaternNu::FiveHalves => 5f64.sqrt() / theta,
        }
    }

    /// Polynomial `P` with `k(s) = σ² P(s) e^{-cs}`, ascending coefficients.
    fn poly(self, c: f64) -> Vec<f64> {
        match self {
            MaternNu::Half => vec![1.0],
            MaternNu::ThreeHalves => vec![1.0, c],
            MaternNu::FiveHalves => vec![1.0, c, c * c / 3.0],
        }
    }
}

/// Direct closed-form Matérn covariance.
pub fn matern(nu: MaternNu, theta: f64, sigma2: f64, r: f64) -> f64 {
    let s = r.abs();
    let c = nu.rate(theta);
    let p = nu.poly(c);
    sigma2 * p.iter().enumerate().map(|(i, a)| a * s.powi(i as i32)).sum::<f64>() * (-c * s).exp()
}

/// The kernel section `t ↦ k(x, t)` of a Matérn kernel.
#[derive(Clone, Debug)]
pub struct MaternSection {
    pub nu: MaternNu,
    pub theta: f64,
    pub sigma2: f64,
    pub x: f64,
}

impl Smooth for MaternSection {
    fn deriv(&self, t: f64, order: usize) -> f64 {
        let c = self.nu.rate(self.theta);
        // d/ds (P e^{-cs}) = (P' − cP) e^{-cs}
        let mut p = self.nu.poly(c);
        for _ in 0..order {
            let mut next = vec![0.0; p.len()];
            for (i, &a) in p.iter().enumerate() {
                next[i] -= c * a;
                if i > 0 {
                    next[i - 1] += i as f64 * a;
                }
            }
            p = next;
        }
        let r = t - self.x;
        let s = r.abs();
        let sign = if r < 0.0 && order % 2 == 1 { -1.0 } else { 1.0 };
        let poly: f64 = p.iter().enumerate().map(|(i, a)| a * s.powi(i as i32)).sum();
        sign * self.sigma2 * poly * (-c * s).exp()
    }

    fn breaks(&self) -> Vec<f64> {
        vec![self.x]
    }
}

/// `Σ w_i f_i`.
pub struct Combination<'a>(pub Vec<(f64, &'a dyn Smooth)>);

impl Smooth for Combination<'_> {
    fn deriv(&self, t: f64, order: usize) -> f64 {
        self.0.iter().map(|(w, f)| w * f.deriv(t, order)).sum()
    }

    fn breaks(&self) -> Vec<f64> {
        self.0.iter().flat_map(|(_, f)| f.breaks()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn section_derivatives_match_finite_differences() {
        for nu in MaternNu::ALL {
            let k = MaternSection { nu, theta: 0.7, sigma2: 1.3, x: 0.2 };
            for &t in &[-0.9, 0.5, 1.7] {
                for order in 0..3 {
                    let h = 1e-5;
                    let fd = (k.deriv(t + h, order) - k.deriv(t - h, order)) / (2.0 * h);
                    let exact = k.deriv(t, order + 1);
                    assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()), "{nu:?} {t} {order}");
                }
            }
            assert!((k.value(0.9) - matern(nu, 0.7, 1.3, 0.7)).abs() < 1e-15);
        }
    }
}
