//! Inner products of Matérn RKHSs on an interval.
//!
//! A half-integer Matérn kernel has spectral density `1 / |Σ α_k (iω)^k|²`,
//! which makes its RKHS norm on `[a, b]` the integral of `(L_t f)²` for the
//! differential operator `L_t = Σ α_k d^k/dt^k` plus a quadratic form in the
//! derivatives of `f` at `a`. Sinusoids are closed under `L_t`, so inner
//! products between [`CosineForm`]s reduce to elementary integrals and are
//! computed exactly.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::matern::{MaternSpec, Nu};
use crate::scalar::{c, Scalar};

/// Integration interval `[a, b]` of the inner product.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RkhsDomain<T> {
    a: T,
    b: T,
}

impl<T: Scalar> RkhsDomain<T> {
    pub fn new(a: T, b: T) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidParameter(format!(
                "RKHS domain needs finite a < b, got [{a}, {b}]"
            )));
        }
        Ok(Self { a, b })
    }

    /// `[min(x), max(x)]` of a set of inputs.
    pub fn spanning(inputs: &[T]) -> Result<Self> {
        let lo = inputs.iter().copied().fold(T::infinity(), T::min);
        let hi = inputs.iter().copied().fold(T::neg_infinity(), T::max);
        Self::new(lo, hi)
    }

    pub fn start(&self) -> T {
        self.a
    }

    pub fn end(&self) -> T {
        self.b
    }

    pub fn length(&self) -> T {
        self.b - self.a
    }
}

/// One term `amplitude · cos(omega·x + phase)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosineTerm<T> {
    pub amplitude: T,
    pub omega: T,
    pub phase: T,
}

/// A finite sum of cosines kept in canonical form: non-negative amplitudes
/// and frequencies, phases in `[0, 2π)`, at most one term per frequency,
/// sorted by frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct CosineForm<T> {
    terms: Vec<CosineTerm<T>>,
}

const ZERO_AMPLITUDE: f64 = 1e-14;

impl<T: Scalar> CosineForm<T> {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    /// `amplitude · cos(omega·x + phase)`.
    pub fn cosine(amplitude: T, omega: T, phase: T) -> Self {
        Self::from_terms(vec![CosineTerm { amplitude, omega, phase }])
    }

    /// `amplitude · sin(omega·x) = amplitude · cos(omega·x − π/2)`.
    pub fn sine(amplitude: T, omega: T) -> Self {
        Self::cosine(amplitude, omega, -T::FRAC_PI_2())
    }

    /// Canonicalises arbitrary terms (signs folded into phases, equal
    /// frequencies merged, negligible terms dropped).
    pub fn from_terms(terms: Vec<CosineTerm<T>>) -> Self {
        let scale = terms
            .iter()
            .fold(T::zero(), |m, t| m.max(t.amplitude.abs()));
        // (omega, r_c, r_s) with ρ cos(ωx + φ) = r_c cos(ωx) − r_s sin(ωx)
        let mut parts: Vec<(T, T, T)> = terms
            .into_iter()
            .map(|t| {
                let (omega, phase) = if t.omega < T::zero() {
                    (-t.omega, -t.phase)
                } else {
                    (t.omega, t.phase)
                };
                (omega, t.amplitude * phase.cos(), t.amplitude * phase.sin())
            })
            .collect();
        parts.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite frequency"));

        let merge_tol = c::<T>(1e-14) * parts.last().map_or(T::zero(), |p| p.0);
        let mut merged: Vec<(T, T, T)> = Vec::with_capacity(parts.len());
        for (omega, rc, rs) in parts {
            match merged.last_mut() {
                Some(last) if (omega - last.0).abs() <= merge_tol => {
                    last.1 += rc;
                    last.2 += rs;
                }
                _ => merged.push((omega, rc, rs)),
            }
        }

        let floor = c::<T>(ZERO_AMPLITUDE) * scale;
        let terms = merged
            .into_iter()
            .filter_map(|(omega, rc, rs)| {
                let (amplitude, phase) = if omega == T::zero() {
                    // constant term: only the real part is visible
                    (rc.abs(), if rc < T::zero() { T::PI() } else { T::zero() })
                } else {
                    polar(rc, rs)
                };
                (amplitude > floor && amplitude > T::zero()).then_some(CosineTerm {
                    amplitude,
                    omega,
                    phase,
                })
            })
            .collect();
        Self { terms }
    }

    pub fn terms(&self) -> &[CosineTerm<T>] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: T) -> T {
        self.terms
            .iter()
            .map(|t| t.amplitude * (t.omega * x + t.phase).cos())
            .sum()
    }

    /// `order`-th derivative at `x`.
    pub fn derivative(&self, x: T, order: usize) -> T {
        self.terms
            .iter()
            .map(|t| t.amplitude * t.omega.powi(order as i32) * quarter_turn_cos(t.omega * x + t.phase, order))
            .sum()
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|t| CosineTerm { amplitude: t.amplitude * factor, ..*t })
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.terms.iter().chain(&other.terms).copied().collect())
    }
}

/// Amplitude and phase of `r_c + i r_s`, phase wrapped into `[0, 2π)`.
///
/// Uses the arcsin branch rule: `φ = asin(r_s/ρ)` when `r_c ≥ 0`, otherwise
/// `φ = π − asin(r_s/ρ)`.
fn polar<T: Scalar>(rc: T, rs: T) -> (T, T) {
    let rho = rc.hypot(rs);
    if rho == T::zero() {
        return (T::zero(), T::zero());
    }
    let s = (rs / rho).max(-T::one()).min(T::one()).asin();
    let phase = if rc >= T::zero() { s } else { T::PI() - s };
    (rho, wrap_phase(phase))
}

fn wrap_phase<T: Scalar>(phase: T) -> T {
    let two_pi = T::TAU();
    let mut p = phase % two_pi;
    if p < T::zero() {
        p += two_pi;
    }
    if p >= two_pi {
        p = T::zero();
    }
    p
}

/// `cos(u + order·π/2)` without accumulating rounding in the shift.
#[inline]
fn quarter_turn_cos<T: Scalar>(u: T, order: usize) -> T {
    match order % 4 {
        0 => u.cos(),
        1 => -u.sin(),
        2 => -u.cos(),
        _ => u.sin(),
    }
}

/// The operator `L_t = Σ α_k d^k/dt^k` together with the boundary matrix
/// `d_{j,k}` (zero where `j + k` is odd).
#[derive(Clone, Debug, PartialEq)]
pub struct DifferentialOperator<T> {
    alphas: Vec<T>,
    boundary: Matrix<T>,
}

impl<T: Scalar> DifferentialOperator<T> {
    /// Builds the operator from its coefficients `α_0..α_m` (`m ≥ 1`,
    /// `α_0 ≠ 0`, `α_m ≠ 0`).
    pub fn from_coefficients(alphas: Vec<T>) -> Result<Self> {
        if alphas.len() < 2 {
            return Err(Error::InvalidParameter("operator order must be at least 1".into()));
        }
        let m = alphas.len() - 1;
        if alphas[0] == T::zero() || alphas[m] == T::zero() {
            return Err(Error::InvalidParameter(
                "leading and trailing operator coefficients must be non-zero".into(),
            ));
        }
        let mut boundary = Matrix::zeros(m, m);
        for j in 0..m {
            for k in 0..m {
                if (j + k) % 2 != 0 {
                    continue;
                }
                let lo = (j + k + 1).saturating_sub(m);
                let hi = j.min(k);
                let mut d = T::zero();
                for i in lo..=hi {
                    let term = alphas[i] * alphas[j + k + 1 - i];
                    if (j - i) % 2 == 0 {
                        d += term;
                    } else {
                        d -= term;
                    }
                }
                boundary[(j, k)] = d;
            }
        }
        Ok(Self { alphas, boundary })
    }

    pub fn order(&self) -> usize {
        self.alphas.len() - 1
    }

    pub fn alphas(&self) -> &[T] {
        &self.alphas
    }

    /// `d_{j,k}`; zero when `j + k` is odd.
    pub fn boundary(&self) -> &Matrix<T> {
        &self.boundary
    }

    pub fn apply(&self, f: &CosineForm<T>) -> CosineForm<T> {
        apply_coefficients(&self.alphas, f)
    }
}

/// Operator of the Matérn RKHS:
/// `α_k = sqrt((2ν−1)! / (σ² 4^ν ((ν−1/2)!)²)) · C(ν+1/2, k) · (θ/√(2ν))^(k−1/2)`.
pub fn matern_operator<T: Scalar>(spec: &MaternSpec<T>) -> DifferentialOperator<T> {
    let nu = spec.nu();
    let m = nu.order();
    let two_nu = c::<T>(2.0 * nu.value());
    let prefactor = {
        // (2ν−1)! / (4^ν ((ν−1/2)!)²) with integer factorials
        let num = factorial(2 * m - 2) as f64;
        let den = 4f64.powf(nu.value()) * (factorial(m - 1) as f64).powi(2);
        (c::<T>(num / den) / spec.sigma2()).sqrt()
    };
    let base = spec.theta() / two_nu.sqrt();
    let alphas = (0..=m)
        .map(|k| {
            prefactor
                * T::from_usize_lossy(binomial(m, k))
                * base.powf(T::from_usize_lossy(k) - c(0.5))
        })
        .collect();
    DifferentialOperator::from_coefficients(alphas)
        .expect("Matérn operator coefficients are strictly positive")
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

fn binomial(n: usize, k: usize) -> usize {
    (factorial(n) / (factorial(k) * factorial(n - k))) as usize
}

/// `Σ α_i f^(i)` for a cosine form.
pub fn apply_coefficients<T: Scalar>(alphas: &[T], f: &CosineForm<T>) -> CosineForm<T> {
    let terms = f
        .terms
        .iter()
        .map(|t| {
            let (cos_phi, sin_phi) = (t.phase.cos(), t.phase.sin());
            let mut rc = T::zero();
            let mut rs = T::zero();
            let mut omega_pow = T::one();
            for (i, &alpha) in alphas.iter().enumerate() {
                let w = alpha * omega_pow;
                // cos/sin(φ + iπ/2)
                let (ci, si) = match i % 4 {
                    0 => (cos_phi, sin_phi),
                    1 => (-sin_phi, cos_phi),
                    2 => (-cos_phi, -sin_phi),
                    _ => (sin_phi, -cos_phi),
                };
                rc += w * ci;
                rs += w * si;
                omega_pow *= t.omega;
            }
            let (rho, phase) = polar(rc, rs);
            CosineTerm { amplitude: t.amplitude * rho, omega: t.omega, phase }
        })
        .collect();
    CosineForm::from_terms(terms)
}

/// `∫_a^b cos(w x + ψ) dx`, stable as `w → 0`.
#[inline]
fn integrate_cosine<T: Scalar>(w: T, psi: T, dom: &RkhsDomain<T>) -> T {
    let half = (dom.b - dom.a) * c(0.5);
    let mid = (dom.a + dom.b) * c(0.5);
    (dom.b - dom.a) * (w * mid + psi).cos() * sinc(w * half)
}

#[inline]
fn sinc<T: Scalar>(u: T) -> T {
    if u.abs() < c(1e-4) {
        let u2 = u * u;
        T::one() - u2 / c(6.0) + u2 * u2 / c(120.0)
    } else {
        u.sin() / u
    }
}

/// Exact `∫_a^b f(t) g(t) dt` by product-to-sum linearisation.
pub fn integrate_cosine_product<T: Scalar>(
    f: &CosineForm<T>,
    g: &CosineForm<T>,
    dom: &RkhsDomain<T>,
) -> T {
    let half = c::<T>(0.5);
    let mut total = T::zero();
    for s in &f.terms {
        for t in &g.terms {
            let diff = integrate_cosine(s.omega - t.omega, s.phase - t.phase, dom);
            let sum = integrate_cosine(s.omega + t.omega, s.phase + t.phase, dom);
            total += half * s.amplitude * t.amplitude * (diff + sum);
        }
    }
    total
}

/// `⟨f, g⟩ = ∫_a^b (L f)(L g) dt + 2 Σ_{j+k even} d_{j,k} f^(j)(a) g^(k)(a)`.
pub fn inner_product<T: Scalar>(
    op: &DifferentialOperator<T>,
    dom: &RkhsDomain<T>,
    f: &CosineForm<T>,
    g: &CosineForm<T>,
) -> T {
    let lf = op.apply(f);
    let lg = op.apply(g);
    integrate_cosine_product(&lf, &lg, dom) + boundary_form(op, dom, f, g)
}

/// Gram matrix `⟨f_i, f_j⟩` of a family, applying `L` and taking boundary
/// derivatives once per function.
pub fn gram_matrix<T: Scalar>(op: &DifferentialOperator<T>, dom: &RkhsDomain<T>, fs: &[CosineForm<T>]) -> Matrix<T> {
    let m = op.order();
    let applied: Vec<CosineForm<T>> = fs.iter().map(|f| op.apply(f)).collect();
    let derivs: Vec<Vec<T>> = fs.iter().map(|f| (0..m).map(|j| f.derivative(dom.a, j)).collect()).collect();
    let n = fs.len();
    let mut gram = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut acc = T::zero();
            for r in 0..m {
                for s in 0..m {
                    acc += op.boundary[(r, s)] * derivs[i][r] * derivs[j][s];
                }
            }
            let v = integrate_cosine_product(&applied[i], &applied[j], dom) + c::<T>(2.0) * acc;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    gram
}

/// Boundary part `2 Σ d_{j,k} f^(j)(a) g^(k)(a)`.
pub(crate) fn boundary_form<T: Scalar>(
    op: &DifferentialOperator<T>,
    dom: &RkhsDomain<T>,
    f: &CosineForm<T>,
    g: &CosineForm<T>,
) -> T {
    let m = op.order();
    let fd: Vec<T> = (0..m).map(|j| f.derivative(dom.a, j)).collect();
    let gd: Vec<T> = (0..m).map(|k| g.derivative(dom.a, k)).collect();
    let mut acc = T::zero();
    for j in 0..m {
        for k in 0..m {
            let d = op.boundary[(j, k)];
            if d != T::zero() {
                acc += d * fd[j] * gd[k];
            }
        }
    }
    c::<T>(2.0) * acc
}

/// Matérn operator for a regularity with unit lengthscale and variance;
/// handy in tests and diagnostics.
pub fn unit_operator<T: Scalar>(nu: Nu) -> DifferentialOperator<T> {
    matern_operator(&MaternSpec::new(nu, T::one(), T::one()).expect("unit spec"))
}
