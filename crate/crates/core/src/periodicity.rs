//! Monte-Carlo periodicity ratio `R = Var_T[Z_p(T)] / Var_T[Z_p(T) + Z_a(T)]`
//! with `T` uniform on an interval, estimated over joint posterior paths.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gp::GpPosterior;
use crate::scalar::{linspace, mean_var};

pub const DEFAULT_GRID_SIZE: usize = 500;
pub const DEFAULT_REALISATIONS: usize = 1000;
pub const DEFAULT_CUTOFF: f64 = 0.77;

/// Paths per independently seeded stream.
const BATCH: usize = 50;
/// Largest tolerated fraction of degenerate paths.
const MAX_SKIPPED: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct RatioConfig {
    pub grid_size: usize,
    pub n_realisations: usize,
    pub seed: u64,
    pub cutoff: f64,
    /// Support of `T`; the span of the training inputs when `None`.
    pub interval: Option<(f64, f64)>,
    /// Treat a missing component as identically zero instead of failing.
    pub allow_missing: bool,
}

impl RatioConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            grid_size: DEFAULT_GRID_SIZE,
            n_realisations: DEFAULT_REALISATIONS,
            seed,
            cutoff: DEFAULT_CUTOFF,
            interval: None,
            allow_missing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 10 {
            return Err(Error::InvalidParameter("grid_size must be >= 10".into()));
        }
        if self.n_realisations == 0 {
            return Err(Error::InvalidParameter("n_realisations must be >= 1".into()));
        }
        if let Some((a, b)) = self.interval {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidParameter(format!("invalid interval [{a}, {b}]")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicityReport {
    pub ratio_mean: f64,
    /// Sample standard deviation of the per-path ratios.
    pub ratio_std: f64,
    /// Paths that entered the average.
    pub n_realisations: usize,
    pub n_skipped: usize,
    pub lambda: Option<f64>,
    pub neg2_log_likelihood: f64,
    pub is_periodic: bool,
}

/// Grid statistics of one sampled pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathVariances {
    pub var_p: f64,
    pub var_a: f64,
    pub cov: f64,
    pub var_total: f64,
}

/// Population variances and covariance over the grid, `var_total` computed
/// directly from `z_p + z_a`.
pub fn path_variances(zp: &[f64], za: &[f64]) -> PathVariances {
    let n = zp.len() as f64;
    let (mp, var_p) = mean_var(zp);
    let (ma, var_a) = mean_var(za);
    let cov = zp.iter().zip(za).map(|(p, a)| (p - mp) * (a - ma)).sum::<f64>() / n;
    let total: Vec<f64> = zp.iter().zip(za).map(|(p, a)| p + a).collect();
    PathVariances { var_p, var_a, cov, var_total: mean_var(&total).1 }
}

/// `var(z_p) / var(z_p + z_a)` over the grid, `None` when the denominator
/// is below `floor` or zero.
pub fn path_ratio(zp: &[f64], za: &[f64], floor: f64) -> Option<f64> {
    let v = path_variances(zp, za);
    if v.var_total < floor || v.var_total <= 0.0 {
        None
    } else {
        Some(v.var_p / v.var_total)
    }
}

/// Per-path ratios from `n` joint posterior draws on `grid`.
pub fn sample_ratios(post: &GpPosterior<f64>, grid: &[f64], n: usize, seed: u64, allow_missing: bool) -> Result<Vec<Option<f64>>> {
    let sampler = post.joint_sampler(grid, !allow_missing)?;
    let floor = 1e-12 * post.data().output_variance();
    let batches = n.div_ceil(BATCH);
    let per_batch: Vec<Vec<Option<f64>>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = BATCH.min(n - b * BATCH);
            (0..count)
                .map(|_| {
                    let s = sampler.draw(&mut rng);
                    path_ratio(&s.periodic, &s.aperiodic, floor)
                })
                .collect()
        })
        .collect();
    Ok(per_batch.into_iter().flatten().collect())
}

/// Estimates `E[R]` and the spread of `R` across realisations.
pub fn periodicity_ratio(post: &GpPosterior<f64>, cfg: &RatioConfig) -> Result<PeriodicityReport> {
    cfg.validate()?;
    let (a, b) = match cfg.interval {
        Some(i) => i,
        None => {
            let span = post.data().span()?;
            (span.start(), span.end())
        }
    };
    let grid = linspace(a, b, cfg.grid_size);
    let ratios = sample_ratios(post, &grid, cfg.n_realisations, cfg.seed, cfg.allow_missing)?;
    let used: Vec<f64> = ratios.iter().flatten().copied().collect();
    let skipped = ratios.len() - used.len();
    if used.is_empty() || skipped as f64 > MAX_SKIPPED * ratios.len() as f64 {
        return Err(Error::DegenerateDenominator { skipped, total: ratios.len() });
    }
    let n = used.len() as f64;
    let mean = used.iter().sum::<f64>() / n;
    let std = if used.len() > 1 {
        (used.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(PeriodicityReport {
        ratio_mean: mean,
        ratio_std: std,
        n_realisations: used.len(),
        n_skipped: skipped,
        lambda: post.kernel().spec().basis.as_ref().map(|b| b.lambda()),
        neg2_log_likelihood: post.neg2_log_likelihood(),
        is_periodic: mean >= cfg.cutoff,
    })
}

/// Periodic when the mean ratio reaches the cutoff (inclusive).
pub fn classify(report: &PeriodicityReport, cutoff: f64) -> bool {
    report.ratio_mean >= cutoff
}

/// The `k`-th largest finite ratio; labelling with `≥` this cutoff marks
/// exactly `k` series unless there are ties at the boundary.
pub fn top_k_cutoff(ratios: &[f64], k: usize) -> Option<f64> {
    let mut finite: Vec<f64> = ratios.iter().copied().filter(|r| r.is_finite()).collect();
    if k == 0 || finite.is_empty() {
        return None;
    }
    finite.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    Some(finite[k.min(finite.len()) - 1])
}
