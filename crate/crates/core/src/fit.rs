//! Bounded maximum-likelihood fitting of composite-kernel hyperparameters.
//!
//! Parameters are optimised in log-space inside a box by a projected BFGS
//! method with central finite-difference gradients, restarted from points
//! drawn uniformly (in log-space) inside the bounds.

use std::cell::{Cell, RefCell};
use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::composite::CompositeKernel;
use crate::error::{Error, Result};
use crate::gp::{neg2_log_likelihood_for, Dataset, GpPosterior};
use crate::matern::{CompositeKernelSpec, MaternSpec, Nu, Trend};
use crate::periodic::{FourierBasis, PeriodicKernel};
use crate::rkhs::RkhsDomain;

/// Stand-in for a variance lower bound of zero, which log-space cannot hold.
pub const VARIANCE_FLOOR: f64 = 1e-8;
pub const GENE_RESTARTS: usize = 50;
pub const BENCHMARK_RESTARTS: usize = 10;
pub const DEFAULT_MAX_EVALS: usize = 1500;
pub const DEFAULT_GRAD_STEP: f64 = 1e-5;

const PG_TOL: f64 = 1e-5;
const F_TOL: f64 = 2.2e-9;
const MAX_LOG_STEP: f64 = 2.0;
const CACHE_SIZE: usize = 8;

/// A tunable hyperparameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    SigmaP2,
    ThetaP,
    SigmaA2,
    ThetaA,
    Tau2,
    Lambda,
}

impl Param {
    pub const ALL: [Param; 6] =
        [Param::SigmaP2, Param::ThetaP, Param::SigmaA2, Param::ThetaA, Param::Tau2, Param::Lambda];

    pub fn name(self) -> &'static str {
        match self {
            Param::SigmaP2 => "sigma_p2",
            Param::ThetaP => "theta_p",
            Param::SigmaA2 => "sigma_a2",
            Param::ThetaA => "theta_a",
            Param::Tau2 => "tau2",
            Param::Lambda => "lambda",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Current value of this parameter in `spec`.
    pub fn read(self, spec: &CompositeKernelSpec<f64>) -> Result<f64> {
        let missing = |what| Error::InvalidParameter(format!("{} needs a {what} component", self.name()));
        Ok(match self {
            Param::SigmaP2 => spec.periodic.ok_or_else(|| missing("periodic"))?.sigma2(),
            Param::ThetaP => spec.periodic.ok_or_else(|| missing("periodic"))?.theta(),
            Param::SigmaA2 => spec.aperiodic.ok_or_else(|| missing("aperiodic"))?.sigma2(),
            Param::ThetaA => spec.aperiodic.ok_or_else(|| missing("aperiodic"))?.theta(),
            Param::Tau2 => spec.noise_tau2,
            Param::Lambda => spec.basis.as_ref().ok_or_else(|| missing("Fourier basis"))?.lambda(),
        })
    }

    /// Sets this parameter in `spec`.
    pub fn write(self, spec: &mut CompositeKernelSpec<f64>, value: f64) -> Result<()> {
        let missing = |what| Error::InvalidParameter(format!("{} needs a {what} component", self.name()));
        match self {
            Param::SigmaP2 | Param::ThetaP => {
                let k = spec.periodic.ok_or_else(|| missing("periodic"))?;
                spec.periodic = Some(match self {
                    Param::SigmaP2 => k.with_sigma2(value)?,
                    _ => MaternSpec::new(k.nu(), value, k.sigma2())?,
                });
            }
            Param::SigmaA2 | Param::ThetaA => {
                let k = spec.aperiodic.ok_or_else(|| missing("aperiodic"))?;
                spec.aperiodic = Some(match self {
                    Param::SigmaA2 => k.with_sigma2(value)?,
                    _ => MaternSpec::new(k.nu(), value, k.sigma2())?,
                });
            }
            Param::Tau2 => spec.noise_tau2 = value,
            Param::Lambda => {
                let basis = spec.basis.as_ref().ok_or_else(|| missing("Fourier basis"))?;
                spec.basis = Some(basis.with_lambda(value)?);
            }
        }
        Ok(())
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Closed interval in natural space; both ends must be positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    lower: f64,
    upper: f64,
}

impl Bounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower > 0.0 && lower < upper) {
            return Err(Error::InvalidParameter(format!("invalid bounds [{lower}, {upper}]")));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }

    fn log(&self) -> (f64, f64) {
        (self.lower.ln(), self.upper.ln())
    }

    /// `exp(u)` clamped so round-off never leaves the interval.
    fn natural(&self, u: f64) -> f64 {
        u.exp().clamp(self.lower, self.upper)
    }
}

#[derive(Clone, Debug)]
pub struct FitConfig {
    /// Free parameters and their bounds; the rest keep their template values.
    pub bounds: BTreeMap<Param, Bounds>,
    pub n_restarts: usize,
    pub seed: u64,
    /// Likelihood evaluations allowed per restart, gradients included.
    pub max_evals: usize,
    /// Central-difference step in log-space.
    pub grad_step: f64,
    /// RKHS domain; the data span when `None`.
    pub domain: Option<RkhsDomain<f64>>,
    /// A variance whose lower bound is [`VARIANCE_FLOOR`] and which ends
    /// within this factor of it is set to zero by dropping its component.
    pub snap_factor: Option<f64>,
}

impl FitConfig {
    pub fn new(bounds: BTreeMap<Param, Bounds>, n_restarts: usize, seed: u64) -> Self {
        Self {
            bounds,
            n_restarts,
            seed,
            max_evals: DEFAULT_MAX_EVALS,
            grad_step: DEFAULT_GRAD_STEP,
            domain: None,
            snap_factor: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_restarts == 0 {
            return Err(Error::InvalidParameter("n_restarts must be >= 1".into()));
        }
        if self.bounds.is_empty() {
            return Err(Error::InvalidParameter("no free parameters".into()));
        }
        if self.max_evals == 0 || !(self.grad_step > 0.0) {
            return Err(Error::InvalidParameter("invalid optimiser budget or step".into()));
        }
        for b in self.bounds.values() {
            Bounds::new(b.lower, b.upper)?;
        }
        Ok(())
    }

    pub fn params(&self) -> Vec<Param> {
        self.bounds.keys().copied().collect()
    }
}

/// `σ_p² k_p(θ_p) + σ_a² k_a(θ_a) + τ²δ` with the period near 24.
pub fn gene_template(nu: Nu, q: usize) -> Result<CompositeKernelSpec<f64>> {
    let base = MaternSpec::new(nu, 30.0, 1.0)?;
    Ok(CompositeKernelSpec {
        basis: Some(FourierBasis::new(q, 24.0)?),
        periodic: Some(base),
        aperiodic: Some(base),
        trend: Trend::None,
        noise_tau2: 0.01,
    })
}

/// Bounds for screening expression profiles sampled in hours:
/// `θ_p, θ_a ∈ [10, 60]`, `τ² ∈ [1e-5, 0.75]`, `λ ∈ [20, 28]` and
/// `σ_p², σ_a² ∈ [1e-8, max(100·var(y), 1e-6)]`.
pub fn gene_config(data: &Dataset<f64>, seed: u64) -> Result<FitConfig> {
    let var_hi = (100.0 * data.output_variance()).max(1e-6);
    let bounds = BTreeMap::from([
        (Param::SigmaP2, Bounds::new(VARIANCE_FLOOR, var_hi)?),
        (Param::ThetaP, Bounds::new(10.0, 60.0)?),
        (Param::SigmaA2, Bounds::new(VARIANCE_FLOOR, var_hi)?),
        (Param::ThetaA, Bounds::new(10.0, 60.0)?),
        (Param::Tau2, Bounds::new(1e-5, 0.75)?),
        (Param::Lambda, Bounds::new(20.0, 28.0)?),
    ]);
    let mut cfg = FitConfig::new(bounds, GENE_RESTARTS, seed);
    cfg.snap_factor = Some(10.0);
    Ok(cfg)
}

/// `1 + σ_p² k_p(θ) + τ²δ` for 1-periodic signals.
pub fn benchmark_template(nu: Nu, q: usize) -> Result<CompositeKernelSpec<f64>> {
    Ok(CompositeKernelSpec {
        basis: Some(FourierBasis::new(q, 1.0)?),
        periodic: Some(MaternSpec::new(nu, 1.0, 1.0)?),
        aperiodic: None,
        trend: Trend::Constant,
        noise_tau2: 0.01,
    })
}

/// Wide bounds scaled to the data: `θ ∈ [1e-2, 1e2]·span`,
/// `σ_p² ∈ [1e-4, 1e2]·var(y)`, `τ² ∈ [1e-4, 10]·var(y)`, `λ ∈ [0.8, 1.2]`.
pub fn benchmark_config(data: &Dataset<f64>, seed: u64) -> Result<FitConfig> {
    let span = data.span()?.length();
    let var = data.output_variance().max(1e-12);
    let bounds = BTreeMap::from([
        (Param::SigmaP2, Bounds::new(1e-4 * var, 1e2 * var)?),
        (Param::ThetaP, Bounds::new(1e-2 * span, 1e2 * span)?),
        (Param::Tau2, Bounds::new(1e-4 * var, 10.0 * var)?),
        (Param::Lambda, Bounds::new(0.8, 1.2)?),
    ]);
    Ok(FitConfig::new(bounds, BENCHMARK_RESTARTS, seed))
}

type CacheKey = (Nu, u64, u64);

/// Likelihood as a function of a parameter vector. Fourier Gram
/// factorisations are cached by `(ν, θ, λ)`: changing only a variance
/// rescales a cached factor instead of rebuilding it.
pub struct Objective<'a> {
    data: &'a Dataset<f64>,
    template: &'a CompositeKernelSpec<f64>,
    params: Vec<Param>,
    domain: RkhsDomain<f64>,
    cache: RefCell<Vec<(CacheKey, PeriodicKernel<f64>)>>,
    evals: Cell<usize>,
}

impl<'a> Objective<'a> {
    pub fn new(
        data: &'a Dataset<f64>,
        template: &'a CompositeKernelSpec<f64>,
        params: Vec<Param>,
        domain: Option<RkhsDomain<f64>>,
    ) -> Result<Self> {
        template.validate()?;
        for p in &params {
            p.read(template)?;
        }
        let domain = match domain {
            Some(d) => d,
            None => data.span()?,
        };
        Ok(Self { data, template, params, domain, cache: RefCell::new(Vec::new()), evals: Cell::new(0) })
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn domain(&self) -> RkhsDomain<f64> {
        self.domain
    }

    /// Number of likelihood evaluations so far.
    pub fn evaluations(&self) -> usize {
        self.evals.get()
    }

    /// The template with `values` (natural space, in [`params`](Self::params) order) applied.
    pub fn spec_at(&self, values: &[f64]) -> Result<CompositeKernelSpec<f64>> {
        let mut spec = self.template.clone();
        for (p, &v) in self.params.iter().zip(values) {
            p.write(&mut spec, v)?;
        }
        Ok(spec)
    }

    fn sub_kernel(&self, basis: &FourierBasis<f64>, base: MaternSpec<f64>) -> Result<PeriodicKernel<f64>> {
        let key = (base.nu(), base.theta().to_bits(), basis.lambda().to_bits());
        let mut cache = self.cache.borrow_mut();
        if let Some((_, pk)) = cache.iter().find(|(k, _)| *k == key) {
            return if pk.base().sigma2() == base.sigma2() { Ok(pk.clone()) } else { pk.with_variance(base.sigma2()) };
        }
        let pk = PeriodicKernel::build(basis.clone(), base, self.domain)?;
        if cache.len() == CACHE_SIZE {
            cache.remove(0);
        }
        cache.push((key, pk.clone()));
        Ok(pk)
    }

    pub fn kernel_at(&self, values: &[f64]) -> Result<CompositeKernel<f64>> {
        let spec = self.spec_at(values)?;
        spec.validate()?;
        let (periodic, aperiodic) = match &spec.basis {
            Some(basis) => (
                spec.periodic.map(|b| self.sub_kernel(basis, b)).transpose()?,
                spec.aperiodic.map(|b| self.sub_kernel(basis, b)).transpose()?,
            ),
            None => (None, None),
        };
        CompositeKernel::from_parts(spec, periodic, aperiodic)
    }

    /// `−2 log p(y)` at natural-space `values`.
    pub fn value(&self, values: &[f64]) -> Result<f64> {
        self.evals.set(self.evals.get() + 1);
        let v = neg2_log_likelihood_for(&self.kernel_at(values)?, self.data)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidParameter("non-finite likelihood".into()))
        }
    }

    /// Objective at log-space `u`.
    pub fn value_log(&self, u: &[f64]) -> Result<f64> {
        let natural: Vec<f64> = u.iter().map(|x| x.exp()).collect();
        self.value(&natural)
    }

    /// Central finite-difference gradient in log-space. A coordinate whose
    /// two-sided stencil fails falls back to a one-sided difference.
    pub fn gradient_log(&self, u: &[f64], step: f64, f0: Option<f64>) -> Result<Vec<f64>> {
        let mut g = vec![0.0; u.len()];
        let mut x = u.to_vec();
        for i in 0..u.len() {
            x[i] = u[i] + step;
            let fp = self.value_log(&x);
            x[i] = u[i] - step;
            let fm = self.value_log(&x);
            x[i] = u[i];
            g[i] = match (fp, fm) {
                (Ok(p), Ok(m)) => (p - m) / (2.0 * step),
                (Ok(p), Err(_)) => (p - f0.map_or_else(|| self.value_log(u), Ok)?) / step,
                (Err(_), Ok(m)) => (f0.map_or_else(|| self.value_log(u), Ok)? - m) / step,
                (Err(e), Err(_)) => return Err(e),
            };
        }
        Ok(g)
    }
}

/// Outcome of one optimisation restart (natural-space parameters).
#[derive(Clone, Debug, PartialEq)]
pub struct RestartTrace {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    /// `+∞` when the restart never produced a finite objective.
    pub value: f64,
    pub converged: bool,
    pub evaluations: usize,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub params: Vec<Param>,
    /// Best parameters as optimised, in `params` order.
    pub values: Vec<f64>,
    /// Objective at `values`; the minimum over `traces`.
    pub neg2_log_likelihood: f64,
    pub best_restart: usize,
    pub traces: Vec<RestartTrace>,
    /// Fitted specification after snapping negligible variances to zero.
    pub spec: CompositeKernelSpec<f64>,
    /// Variances that were snapped to zero.
    pub snapped: Vec<Param>,
    pub domain: RkhsDomain<f64>,
}

impl FitResult {
    pub fn value_of(&self, p: Param) -> Option<f64> {
        self.params.iter().position(|&q| q == p).map(|i| self.values[i])
    }

    pub fn lambda(&self) -> Option<f64> {
        self.spec.basis.as_ref().map(|b| b.lambda())
    }

    /// Conditions the fitted model on `data`.
    pub fn posterior(&self, data: &Dataset<f64>) -> Result<GpPosterior<f64>> {
        GpPosterior::fit(self.spec.clone(), data.clone(), Some(self.domain))
    }
}

struct Box_ {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Box_ {
    fn project(&self, u: &mut [f64]) {
        for ((x, &l), &h) in u.iter_mut().zip(&self.lo).zip(&self.hi) {
            *x = x.clamp(l, h);
        }
    }

    /// Gradient with components that push against an active bound removed.
    fn projected(&self, u: &[f64], g: &[f64]) -> Vec<f64> {
        (0..u.len())
            .map(|i| {
                let eps = 1e-10 * (self.hi[i] - self.lo[i]);
                if (u[i] <= self.lo[i] + eps && g[i] > 0.0) || (u[i] >= self.hi[i] - eps && g[i] < 0.0) {
                    0.0
                } else {
                    g[i]
                }
            })
            .collect()
    }
}

struct Outcome {
    u: Vec<f64>,
    f: f64,
    converged: bool,
}

/// Projected BFGS on the box from `u0`.
fn minimise(obj: &Objective, bx: &Box_, u0: Vec<f64>, step: f64, max_evals: usize) -> Result<Outcome> {
    let n = u0.len();
    let mut u = u0;
    bx.project(&mut u);
    let mut f = obj.value_log(&u)?;
    let mut g = obj.gradient_log(&u, step, Some(f))?;
    let mut h = identity(n);
    let mut fresh = true;
    while obj.evaluations() < max_evals {
        let pg = bx.projected(&u, &g);
        if pg.iter().all(|x| x.abs() < PG_TOL) {
            return Ok(Outcome { u, f, converged: true });
        }
        let free: Vec<bool> = pg.iter().zip(&g).map(|(p, q)| *p != 0.0 || *q == 0.0).collect();
        let mut d = vec![0.0; n];
        for i in (0..n).filter(|&i| free[i]) {
            d[i] = -(0..n).filter(|&j| free[j]).map(|j| h[i][j] * g[j]).sum::<f64>();
        }
        if dot(&d, &pg) >= 0.0 {
            h = identity(n);
            fresh = true;
            d = pg.iter().map(|x| -x).collect();
        }
        let dmax = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut t = if dmax > MAX_LOG_STEP { MAX_LOG_STEP / dmax } else { 1.0 };
        let mut accepted = None;
        for _ in 0..30 {
            if obj.evaluations() >= max_evals {
                break;
            }
            let mut trial: Vec<f64> = u.iter().zip(&d).map(|(x, dx)| x + t * dx).collect();
            bx.project(&mut trial);
            let s: Vec<f64> = trial.iter().zip(&u).map(|(a, b)| a - b).collect();
            let decrease = dot(&g, &s);
            if decrease >= 0.0 {
                break;
            }
            if let Ok(ft) = obj.value_log(&trial) {
                if ft <= f + 1e-4 * decrease {
                    accepted = Some((trial, ft, s));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((un, fnew, s)) = accepted else {
            if fresh {
                // steepest descent made no progress: a stationary point up to noise
                return Ok(Outcome { u, f, converged: true });
            }
            h = identity(n);
            fresh = true;
            continue;
        };
        let gn = match obj.gradient_log(&un, step, Some(fnew)) {
            Ok(gn) => gn,
            Err(_) => return Ok(Outcome { u: un, f: fnew, converged: false }),
        };
        let small = f - fnew <= F_TOL * f.abs().max(fnew.abs()).max(1.0);
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * norm(&s) * norm(&y) {
            if fresh {
                let scale = sy / dot(&y, &y);
                h = identity(n);
                h.iter_mut().enumerate().for_each(|(i, row)| row[i] = scale);
            }
            bfgs_update(&mut h, &s, &y, sy);
            fresh = false;
        }
        u = un;
        f = fnew;
        g = gn;
        if small {
            return Ok(Outcome { u, f, converged: true });
        }
    }
    Ok(Outcome { u, f, converged: false })
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ`.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Restart starting points, uniform in log-space inside the bounds.
pub fn restart_starts(cfg: &FitConfig) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.n_restarts)
        .map(|_| {
            cfg.bounds
                .values()
                .map(|b| {
                    let (lo, hi) = b.log();
                    lo + rng.random::<f64>() * (hi - lo)
                })
                .collect()
        })
        .collect()
}

/// Maximum-likelihood fit of the free parameters of `template`.
pub fn fit(data: &Dataset<f64>, template: &CompositeKernelSpec<f64>, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    let params = cfg.params();
    let domain = match cfg.domain {
        Some(d) => d,
        None => data.span()?,
    };
    // surfaces structural errors once instead of per restart
    Objective::new(data, template, params.clone(), Some(domain))?;
    let bounds: Vec<Bounds> = cfg.bounds.values().copied().collect();
    let bx = Box_ {
        lo: bounds.iter().map(|b| b.log().0).collect(),
        hi: bounds.iter().map(|b| b.log().1).collect(),
    };
    let to_natural = |u: &[f64]| -> Vec<f64> { u.iter().zip(&bounds).map(|(&x, b)| b.natural(x)).collect() };

    let traces: Vec<RestartTrace> = restart_starts(cfg)
        .into_par_iter()
        .map(|u0| {
            let obj = Objective::new(data, template, params.clone(), Some(domain)).expect("checked above");
            let start = to_natural(&u0);
            match minimise(&obj, &bx, u0, cfg.grad_step, cfg.max_evals) {
                Ok(out) => {
                    let end = to_natural(&out.u);
                    // re-evaluate at the clamped natural point so traces are exact
                    let value = obj.value(&end).unwrap_or(out.f);
                    RestartTrace { start, end, value, converged: out.converged, evaluations: obj.evaluations() }
                }
                Err(_) => RestartTrace {
                    end: start.clone(),
                    start,
                    value: f64::INFINITY,
                    converged: false,
                    evaluations: obj.evaluations(),
                },
            }
        })
        .collect();

    let mut best: Option<usize> = None;
    for (i, t) in traces.iter().enumerate() {
        if t.value.is_finite() && best.is_none_or(|b| t.value < traces[b].value) {
            best = Some(i);
        }
    }
    let best = best.ok_or(Error::AllRestartsFailed(cfg.n_restarts))?;
    let values = traces[best].end.clone();
    let obj = Objective::new(data, template, params.clone(), Some(domain))?;
    let mut spec = obj.spec_at(&values)?;
    let snapped = snap(&mut spec, cfg);
    Ok(FitResult {
        params,
        neg2_log_likelihood: traces[best].value,
        values,
        best_restart: best,
        traces,
        spec,
        snapped,
        domain,
    })
}

fn snap(spec: &mut CompositeKernelSpec<f64>, cfg: &FitConfig) -> Vec<Param> {
    let Some(factor) = cfg.snap_factor else {
        return Vec::new();
    };
    let mut snapped = Vec::new();
    for p in [Param::SigmaP2, Param::SigmaA2] {
        let Some(b) = cfg.bounds.get(&p) else { continue };
        if b.lower() > VARIANCE_FLOOR {
            continue;
        }
        let Ok(v) = p.read(spec) else { continue };
        if v <= factor * b.lower() {
            let mut trial = spec.clone();
            match p {
                Param::SigmaP2 => trial.periodic = None,
                _ => trial.aperiodic = None,
            }
            if trial.validate().is_ok() {
                *spec = trial;
                snapped.push(p);
            }
        }
    }
    snapped
}

/// Best objective at each fixed period, the other free parameters refitted.
#[derive(Clone, Debug)]
pub struct LambdaProfilePoint {
    pub lambda: f64,
    pub neg2_log_likelihood: Result<f64>,
}

/// Profiles the likelihood over `grid`. Every grid point uses the same
/// restart seed, so the profile does not depend on grid order.
pub fn profile_lambda(
    data: &Dataset<f64>,
    template: &CompositeKernelSpec<f64>,
    cfg: &FitConfig,
    grid: &[f64],
) -> Result<Vec<LambdaProfilePoint>> {
    let basis = template
        .basis
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("profiling λ needs a Fourier basis".into()))?;
    let mut sub = cfg.clone();
    sub.bounds.remove(&Param::Lambda);
    Ok(grid
        .iter()
        .map(|&lambda| {
            let result = basis.with_lambda(lambda).and_then(|b| {
                let t = CompositeKernelSpec { basis: Some(b), ..template.clone() };
                fit(data, &t, &sub).map(|r| r.neg2_log_likelihood)
            });
            LambdaProfilePoint { lambda, neg2_log_likelihood: result }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn sine_data(n: usize, period: f64, noise: f64, seed: u64) -> Dataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..n).map(|i| 26.0 + 4.0 * i as f64).collect();
        let ys = xs
            .iter()
            .map(|&x| {
                let e: f64 = StandardNormal.sample(&mut rng);
                (std::f64::consts::TAU * x / period).sin() + noise * e
            })
            .collect();
        Dataset::new(xs, ys).unwrap()
    }

    #[test]
    fn param_round_trip() {
        let mut spec = gene_template(Nu::ThreeHalves, 5).unwrap();
        for (i, p) in Param::ALL.into_iter().enumerate() {
            p.write(&mut spec, 1.5 + i as f64).unwrap();
        }
        for (i, p) in Param::ALL.into_iter().enumerate() {
            assert_eq!(p.read(&spec).unwrap(), 1.5 + i as f64);
            assert_eq!(Param::from_name(p.name()), Some(p));
        }
        let bench = benchmark_template(Nu::Half, 3).unwrap();
        assert!(Param::ThetaA.read(&bench).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(Bounds::new(0.0, 1.0).is_err());
        assert!(Bounds::new(2.0, 1.0).is_err());
        assert!(Bounds::new(1.0, f64::INFINITY).is_err());
        let d = sine_data(13, 24.0, 0.1, 0);
        let mut cfg = gene_config(&d, 1).unwrap();
        cfg.n_restarts = 0;
        assert!(fit(&d, &gene_template(Nu::ThreeHalves, 5).unwrap(), &cfg).is_err());
        // a free parameter the template lacks
        let cfg = gene_config(&d, 1).unwrap();
        assert!(fit(&d, &benchmark_template(Nu::ThreeHalves, 5).unwrap(), &cfg).is_err());
    }

    #[test]
    fn cached_objective_matches_direct_build() {
        let d = sine_data(13, 24.0, 0.1, 2);
        let t = gene_template(Nu::ThreeHalves, 6).unwrap();
        let cfg = gene_config(&d, 0).unwrap();
        let obj = Objective::new(&d, &t, cfg.params(), None).unwrap();
        let points = [[0.5, 20.0, 0.2, 30.0, 0.01, 23.0], [0.9, 20.0, 0.3, 30.0, 0.02, 23.0]];
        for p in points {
            let spec = obj.spec_at(&p).unwrap();
            let direct = crate::gp::neg2_log_likelihood(&spec, &d).unwrap();
            assert!((obj.value(&p).unwrap() - direct).abs() < 1e-9 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn bfgs_minimises_quadratic_in_box() {
        // exercised through a one-parameter likelihood: τ² only
        let d = Dataset::new(vec![0.0, 1.0, 2.0, 3.0], vec![1.0, -1.0, 2.0, 0.5]).unwrap();
        let template = CompositeKernelSpec {
            basis: None,
            periodic: None,
            aperiodic: None,
            trend: Trend::Constant,
            noise_tau2: 1.0,
        };
        let cfg = FitConfig::new(BTreeMap::from([(Param::Tau2, Bounds::new(1e-3, 1e3).unwrap())]), 3, 5);
        let r = fit(&d, &template, &cfg).unwrap();
        // K = 11ᵀ + τ² I; the optimum satisfies tr(K⁻¹) = yᵀK⁻²y, found by a scan
        let obj = Objective::new(&d, &template, vec![Param::Tau2], None).unwrap();
        let scan = (0..20001)
            .map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 20000.0))
            .map(|t| (obj.value(&[t]).unwrap(), t))
            .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
        assert!((r.values[0] / scan.1 - 1.0).abs() < 2e-3, "{} vs {}", r.values[0], scan.1);
        assert!(r.neg2_log_likelihood <= scan.0 + 1e-9);
        assert!(r.traces.iter().all(|t| t.converged));
    }

    #[test]
    fn deterministic_and_in_bounds() {
        let d = sine_data(13, 24.0, 0.2, 3);
        let t = gene_template(Nu::ThreeHalves, 8).unwrap();
        let mut cfg = gene_config(&d, 11).unwrap();
        cfg.n_restarts = 3;
        let a = fit(&d, &t, &cfg).unwrap();
        let b = fit(&d, &t, &cfg).unwrap();
        assert_eq!(a.traces, b.traces);
        assert_eq!(a.values, b.values);
        let min = a.traces.iter().map(|t| t.value).fold(f64::INFINITY, f64::min);
        assert_eq!(a.neg2_log_likelihood, min);
        for tr in &a.traces {
            for ((p, b), (&s, &e)) in cfg.bounds.iter().zip(tr.start.iter().zip(&tr.end)) {
                assert!(b.contains(s) && b.contains(e), "{p} {s} {e}");
            }
        }
    }

    #[test]
    fn more_restarts_never_worse() {
        let d = sine_data(13, 22.0, 0.3, 4);
        let t = gene_template(Nu::ThreeHalves, 8).unwrap();
        let mut cfg = gene_config(&d, 7).unwrap();
        cfg.n_restarts = 1;
        let one = fit(&d, &t, &cfg).unwrap();
        cfg.n_restarts = 6;
        let six = fit(&d, &t, &cfg).unwrap();
        // the first start is shared: same seed, same stream
        assert_eq!(one.traces[0], six.traces[0]);
        assert!(six.neg2_log_likelihood <= one.neg2_log_likelihood);
    }

    #[test]
    fn starts_are_uniform_in_log_space() {
        let b = Bounds::new(1e-3, 1e3).unwrap();
        let mut cfg = FitConfig::new(BTreeMap::from([(Param::Tau2, b)]), 4000, 9);
        cfg.max_evals = 1;
        let starts = restart_starts(&cfg);
        // fraction below the log-midpoint 1 ≈ 1/2, and below 1e-2 ≈ 1/6
        let frac = |c: f64| starts.iter().filter(|s| s[0].exp() < c).count() as f64 / 4000.0;
        let se = (0.25f64 / 4000.0).sqrt();
        assert!((frac(1.0) - 0.5).abs() < 4.0 * se);
        assert!((frac(1e-2) - 1.0 / 6.0).abs() < 4.0 * se);
    }

    #[test]
    fn snapping_drops_negligible_component() {
        let mut spec = gene_template(Nu::ThreeHalves, 4).unwrap();
        Param::SigmaP2.write(&mut spec, 5e-8).unwrap();
        let d = sine_data(13, 24.0, 0.1, 0);
        let cfg = gene_config(&d, 0).unwrap();
        let snapped = snap(&mut spec, &cfg);
        assert_eq!(snapped, vec![Param::SigmaP2]);
        assert!(spec.periodic.is_none() && spec.aperiodic.is_some());
    }

    #[test]
    fn single_point_profile_equals_constrained_fit() {
        let d = sine_data(13, 24.0, 0.1, 5);
        let t = gene_template(Nu::ThreeHalves, 6).unwrap();
        let mut cfg = gene_config(&d, 3).unwrap();
        cfg.n_restarts = 2;
        let prof = profile_lambda(&d, &t, &cfg, &[23.0]).unwrap();
        let mut fixed = cfg.clone();
        fixed.bounds.remove(&Param::Lambda);
        let t23 = CompositeKernelSpec { basis: Some(FourierBasis::new(6, 23.0).unwrap()), ..t.clone() };
        let direct = fit(&d, &t23, &fixed).unwrap();
        assert_eq!(prof[0].neg2_log_likelihood, Ok(direct.neg2_log_likelihood));
        let rev = profile_lambda(&d, &t, &cfg, &[25.0, 23.0]).unwrap();
        assert_eq!(rev[1].neg2_log_likelihood, prof[0].neg2_log_likelihood);
    }
}
