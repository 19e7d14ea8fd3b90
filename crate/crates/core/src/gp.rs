//! GP regression with the composite kernel: posterior mean and variance,
//! the periodic/aperiodic sub-models, their conditional cross-covariance,
//! joint conditional sampling and the likelihood objective.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::composite::{add_assign, Component, CompositeKernel};
use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Matrix, GP_JITTER_LADDER};
use crate::matern::CompositeKernelSpec;
use crate::rkhs::RkhsDomain;
use crate::scalar::{c, Scalar};

/// Relative jitter ladder for the joint conditional covariance of sampled
/// paths. That matrix is rank deficient by construction (the periodic
/// block has rank at most `2q`), so it needs more headroom than `K`.
pub const SAMPLE_JITTER_LADDER: [f64; 8] = [0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// Negative variances below this fraction of the prior variance are
/// counted in the audit counter before being clamped to zero.
const CLAMP_AUDIT: f64 = 1e-10;

/// Observed series.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    inputs: Vec<T>,
    outputs: Vec<T>,
    id: Option<String>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(inputs: Vec<T>, outputs: Vec<T>) -> Result<Self> {
        if inputs.len() != outputs.len() {
            return Err(Error::InvalidParameter(format!(
                "{} inputs but {} outputs",
                inputs.len(),
                outputs.len()
            )));
        }
        if inputs.len() < 2 {
            return Err(Error::InvalidParameter("a dataset needs at least 2 observations".into()));
        }
        if inputs.iter().chain(&outputs).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite observation".into()));
        }
        Ok(Self { inputs, outputs, id: None })
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn inputs(&self) -> &[T] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[T] {
        &self.outputs
    }

    pub fn id(&self) -> Option<&str> {
        self.id.as_deref()
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// `[min(x), max(x)]`, the default RKHS domain.
    pub fn span(&self) -> Result<RkhsDomain<T>> {
        RkhsDomain::spanning(&self.inputs)
    }

    pub fn output_variance(&self) -> T {
        crate::scalar::mean_var(&self.outputs).1
    }

    /// Same inputs with outputs multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            inputs: self.inputs.clone(),
            outputs: self.outputs.iter().map(|&y| y * factor).collect(),
            id: self.id.clone(),
        }
    }
}

/// Conditional GP given a dataset.
#[derive(Debug)]
pub struct GpPosterior<T> {
    kernel: CompositeKernel<T>,
    data: Dataset<T>,
    chol: Cholesky<T>,
    alpha: Vec<T>,
    clamped: AtomicUsize,
}

impl<T: Scalar> Clone for GpPosterior<T> {
    fn clone(&self) -> Self {
        Self {
            kernel: self.kernel.clone(),
            data: self.data.clone(),
            chol: self.chol.clone(),
            alpha: self.alpha.clone(),
            clamped: AtomicUsize::new(self.clamped.load(Ordering::Relaxed)),
        }
    }
}

impl<T: Scalar> GpPosterior<T> {
    pub fn new(kernel: CompositeKernel<T>, data: Dataset<T>) -> Result<Self> {
        let k = kernel.covariance_matrix(data.inputs());
        let chol = Cholesky::with_jitter_ladder(&k, &GP_JITTER_LADDER, "observation covariance")?;
        let alpha = chol.solve(data.outputs());
        Ok(Self { kernel, data, chol, alpha, clamped: AtomicUsize::new(0) })
    }

    /// Builds the kernel on `domain` (default: the data span) and conditions.
    pub fn fit(spec: CompositeKernelSpec<T>, data: Dataset<T>, domain: Option<RkhsDomain<T>>) -> Result<Self> {
        let dom = match domain {
            Some(d) => d,
            None => data.span()?,
        };
        Self::new(CompositeKernel::build(spec, dom)?, data)
    }

    pub fn kernel(&self) -> &CompositeKernel<T> {
        &self.kernel
    }

    pub fn data(&self) -> &Dataset<T> {
        &self.data
    }

    pub fn cholesky(&self) -> &Cholesky<T> {
        &self.chol
    }

    /// Diagonal jitter added to `K`.
    pub fn jitter(&self) -> T {
        self.chol.jitter()
    }

    /// `K⁻¹ y`.
    pub fn weights(&self) -> &[T] {
        &self.alpha
    }

    /// Number of variances that came out more negative than round-off
    /// allows and were clamped to zero.
    pub fn clamped_count(&self) -> usize {
        self.clamped.load(Ordering::Relaxed)
    }

    /// `n log 2π + log|K| + yᵀ K⁻¹ y` for this posterior's factorisation.
    pub fn neg2_log_likelihood(&self) -> T {
        let n = T::from_usize_lossy(self.data.len());
        n * T::TAU().ln() + self.chol.log_det() + dot(self.data.outputs(), &self.alpha)
    }

    fn clamp(&self, v: T, prior: T) -> T {
        if v >= T::zero() {
            return v;
        }
        if v < -c::<T>(CLAMP_AUDIT) * prior.abs() {
            self.clamped.fetch_add(1, Ordering::Relaxed);
        }
        T::zero()
    }

    fn column(&self, m: &Matrix<T>) -> Vec<T> {
        (0..m.rows()).map(|i| m[(i, 0)]).collect()
    }

    fn noise_free_cross(&self, t: T) -> Vec<T> {
        self.column(&self.kernel.cross_matrix(self.data.inputs(), &[t]))
    }

    fn component_cross(&self, t: T, which: Component) -> Result<Vec<T>> {
        Ok(self.column(&self.kernel.component_matrix(which, self.data.inputs(), &[t])?))
    }

    fn whiten(&self, mut v: Vec<T>) -> Vec<T> {
        self.chol.solve_lower_in_place(&mut v);
        v
    }

    /// `m(t) = k(t)ᵀ K⁻¹ y` and `v(t) = k(t,t) − k(t)ᵀ K⁻¹ k(t)`.
    pub fn mean_var(&self, t: T) -> (T, T) {
        let kt = self.noise_free_cross(t);
        let mean = dot(&kt, &self.alpha);
        let prior = self.kernel.eval(t, t, false);
        let w = self.whiten(kt);
        (mean, self.clamp(prior - dot(&w, &w), prior))
    }

    /// Vectorised [`mean_var`](Self::mean_var).
    pub fn predict(&self, ts: &[T]) -> (Vec<T>, Vec<T>) {
        let kx = self.kernel.cross_matrix(self.data.inputs(), ts);
        let means = kx.tr_mul_vec(&self.alpha);
        let w = self.chol.solve_lower_matrix(&kx);
        let vars = ts
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let prior = self.kernel.eval(t, t, false);
                let explained = (0..w.rows()).map(|i| w[(i, j)] * w[(i, j)]).sum::<T>();
                self.clamp(prior - explained, prior)
            })
            .collect();
        (means, vars)
    }

    /// Contribution of the trend term to the posterior mean.
    pub fn trend_mean(&self, t: T) -> T {
        let trend = self.kernel.trend();
        self.data
            .inputs()
            .iter()
            .zip(&self.alpha)
            .map(|(&x, &a)| trend.eval(t, x) * a)
            .sum()
    }

    /// `m_p(t)` or `m_a(t)`.
    pub fn submodel_mean(&self, t: T, which: Component) -> Result<T> {
        Ok(dot(&self.component_cross(t, which)?, &self.alpha))
    }

    /// `v_p(t)` or `v_a(t)`.
    pub fn submodel_var(&self, t: T, which: Component) -> Result<T> {
        let prior = self.kernel.component_eval(which, t, t)?;
        let w = self.whiten(self.component_cross(t, which)?);
        Ok(self.clamp(prior - dot(&w, &w), prior))
    }

    /// `Cov(Z_p(t), Z_a(t') | data) = −k_p(t)ᵀ K⁻¹ k_a(t')`.
    pub fn cross_cov(&self, t: T, t_prime: T) -> Result<T> {
        let wp = self.whiten(self.component_cross(t, Component::Periodic)?);
        let wa = self.whiten(self.component_cross(t_prime, Component::Aperiodic)?);
        Ok(-dot(&wp, &wa))
    }

    /// Joint conditional mean and covariance of the present components on
    /// `grid`, stacked component-major.
    fn joint_moments(&self, grid: &[T], comps: &[Component]) -> Result<(Vec<T>, Matrix<T>)> {
        let m = grid.len();
        let xs = self.data.inputs();
        let mut means = Vec::with_capacity(comps.len() * m);
        let mut whitened = Vec::with_capacity(comps.len());
        let mut priors = Vec::with_capacity(comps.len());
        for &which in comps {
            let cross = self.kernel.component_matrix(which, xs, grid)?;
            means.extend(cross.tr_mul_vec(&self.alpha));
            whitened.push(self.chol.solve_lower_matrix(&cross));
            priors.push(self.kernel.component_matrix(which, grid, grid)?);
        }
        let dim = comps.len() * m;
        let mut cov = Matrix::zeros(dim, dim);
        for (bi, wi) in whitened.iter().enumerate() {
            for (bj, wj) in whitened.iter().enumerate().take(bi + 1) {
                let mut block = wi.tr_mul(wj);
                block.scale(-T::one());
                if bi == bj {
                    add_assign(&mut block, &priors[bi]);
                }
                for r in 0..m {
                    for s in 0..m {
                        let v = block[(r, s)];
                        cov[(bi * m + r, bj * m + s)] = v;
                        cov[(bj * m + s, bi * m + r)] = v;
                    }
                }
            }
        }
        // exact symmetry inside diagonal blocks
        for i in 0..dim {
            for j in 0..i {
                let v = cov[(i, j)];
                cov[(j, i)] = v;
            }
        }
        Ok((means, cov))
    }

    /// Prepares repeated joint draws of `(Z_p, Z_a)` on `grid`. A missing
    /// component is returned as identically zero unless `require_both`.
    pub fn joint_sampler(&self, grid: &[T], require_both: bool) -> Result<JointSampler<T>> {
        if grid.is_empty() {
            return Err(Error::InvalidParameter("sampling grid is empty".into()));
        }
        let present: Vec<Component> = [Component::Periodic, Component::Aperiodic]
            .into_iter()
            .filter(|&w| self.kernel.has(w))
            .collect();
        if require_both || present.is_empty() {
            for which in [Component::Periodic, Component::Aperiodic] {
                if !self.kernel.has(which) {
                    return Err(Error::MissingComponent(which.name()));
                }
            }
        }
        let (mean, cov) = self.joint_moments(grid, &present)?;
        let chol = Cholesky::with_jitter_ladder(&cov, &SAMPLE_JITTER_LADDER, "joint conditional covariance")?;
        Ok(JointSampler { grid_len: grid.len(), present, mean, chol })
    }

    /// `n_samples` joint conditional draws of `(Z_p, Z_a)` on `grid`,
    /// deterministic given `seed`.
    pub fn sample_joint(&self, grid: &[T], n_samples: usize, seed: u64) -> Result<Vec<JointSample<T>>>
    where
        StandardNormal: Distribution<T>,
    {
        let sampler = self.joint_sampler(grid, true)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..n_samples).map(|_| sampler.draw(&mut rng)).collect())
    }
}

/// One joint path of the two components on the sampling grid.
#[derive(Clone, Debug, PartialEq)]
pub struct JointSample<T> {
    pub periodic: Vec<T>,
    pub aperiodic: Vec<T>,
}

/// Factorised joint conditional distribution on a fixed grid.
#[derive(Clone, Debug)]
pub struct JointSampler<T> {
    grid_len: usize,
    present: Vec<Component>,
    mean: Vec<T>,
    chol: Cholesky<T>,
}

impl<T: Scalar> JointSampler<T> {
    pub fn jitter(&self) -> T {
        self.chol.jitter()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> JointSample<T>
    where
        StandardNormal: Distribution<T>,
    {
        let z: Vec<T> = (0..self.mean.len()).map(|_| StandardNormal.sample(rng)).collect();
        let mut path = self.chol.lower_mul(&z);
        for (p, &m) in path.iter_mut().zip(&self.mean) {
            *p += m;
        }
        let m = self.grid_len;
        let mut sample = JointSample { periodic: vec![T::zero(); m], aperiodic: vec![T::zero(); m] };
        for (b, which) in self.present.iter().enumerate() {
            let block = path[b * m..(b + 1) * m].to_vec();
            match which {
                Component::Periodic => sample.periodic = block,
                Component::Aperiodic => sample.aperiodic = block,
            }
        }
        sample
    }
}

/// `−2 log p(y)`: `n log 2π + log|K| + yᵀ K⁻¹ y`, via Cholesky.
pub fn neg2_log_likelihood<T: Scalar>(spec: &CompositeKernelSpec<T>, data: &Dataset<T>) -> Result<T> {
    let kernel = CompositeKernel::build(spec.clone(), data.span()?)?;
    neg2_log_likelihood_for(&kernel, data)
}

/// Likelihood objective for an already-built kernel.
pub fn neg2_log_likelihood_for<T: Scalar>(kernel: &CompositeKernel<T>, data: &Dataset<T>) -> Result<T> {
    neg2_log_likelihood_matrix(&kernel.covariance_matrix(data.inputs()), data.outputs())
}

/// Likelihood objective for an explicit covariance matrix.
pub fn neg2_log_likelihood_matrix<T: Scalar>(k: &Matrix<T>, y: &[T]) -> Result<T> {
    let chol = Cholesky::with_jitter_ladder(k, &GP_JITTER_LADDER, "observation covariance")?;
    let mut w = y.to_vec();
    chol.solve_lower_in_place(&mut w);
    let n = T::from_usize_lossy(y.len());
    Ok(n * T::TAU().ln() + chol.log_det() + dot(&w, &w))
}
