//! Batch fitting and scoring of many series.

use std::time::Instant;

use gp_periodicity::fit::{self, FitConfig};
use gp_periodicity::periodicity::{periodicity_ratio, top_k_cutoff, RatioConfig};
use gp_periodicity::{CompositeKernelSpec, Dataset, Result};
use rayon::prelude::*;

use crate::config::{BaseProfile, RunConfig};
use crate::ingest::DEFAULT_ID;

/// Scores of one successfully screened series.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesScore {
    pub ratio_mean: f64,
    pub ratio_std: f64,
    pub lambda_hat: Option<f64>,
    pub neg2_log_likelihood: f64,
    /// Diagonal inflation used to factor the fitted covariance matrix.
    pub jitter_used: f64,
    pub is_periodic: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScreenRow {
    pub id: String,
    pub outcome: std::result::Result<SeriesScore, String>,
}

/// FNV-1a of the master seed followed by the series id, so a series keeps
/// its seed whatever else is in the batch.
pub fn series_seed(master: u64, id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in master.to_le_bytes().iter().chain(id.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Model template and optimiser settings of the configured profile for one
/// (already centred) series.
pub fn fit_setup(data: &Dataset<f64>, cfg: &RunConfig, seed: u64) -> Result<(CompositeKernelSpec<f64>, FitConfig)> {
    let (template, mut fit_cfg) = match cfg.base {
        BaseProfile::Gene => (fit::gene_template(cfg.nu, cfg.q)?, fit::gene_config(data, seed)?),
        BaseProfile::Benchmark => (fit::benchmark_template(cfg.nu, cfg.q)?, fit::benchmark_config(data, seed)?),
    };
    fit_cfg.n_restarts = cfg.n_restarts;
    fit_cfg.bounds.extend(cfg.bounds.iter().map(|(p, b)| (*p, *b)));
    Ok((template, fit_cfg))
}

/// Centres the series, fits the profile's model and estimates the
/// periodicity ratio against `cfg.cutoff`.
pub fn score_series(data: &Dataset<f64>, cfg: &RunConfig) -> Result<SeriesScore> {
    let seed = series_seed(cfg.seed, data.id().unwrap_or(DEFAULT_ID));
    let mean = data.outputs().iter().sum::<f64>() / data.len() as f64;
    let centred = Dataset::new(data.inputs().to_vec(), data.outputs().iter().map(|y| y - mean).collect())?;
    let (template, fit_cfg) = fit_setup(&centred, cfg, seed)?;
    let fitted = fit::fit(&centred, &template, &fit_cfg)?;
    let post = fitted.posterior(&centred)?;
    let ratio_cfg = RatioConfig {
        grid_size: cfg.grid_size,
        n_realisations: cfg.n_realisations,
        seed: seed.rotate_left(32),
        cutoff: cfg.cutoff,
        interval: cfg.interval,
        allow_missing: true,
    };
    let report = periodicity_ratio(&post, &ratio_cfg)?;
    Ok(SeriesScore {
        ratio_mean: report.ratio_mean,
        ratio_std: report.ratio_std,
        lambda_hat: report.lambda,
        neg2_log_likelihood: report.neg2_log_likelihood,
        jitter_used: post.jitter(),
        is_periodic: report.is_periodic,
    })
}

/// Scores every series in parallel; rows stay in input order. With
/// `top_k` the cutoff becomes the k-th largest ratio of the batch.
pub fn screen(series: &[Dataset<f64>], cfg: &RunConfig) -> Vec<ScreenRow> {
    let mut rows: Vec<ScreenRow> = series
        .par_iter()
        .map(|d| {
            let id = d.id().unwrap_or(DEFAULT_ID).to_owned();
            let start = Instant::now();
            let outcome = score_series(d, cfg).map_err(|e| e.to_string());
            match &outcome {
                Ok(s) => log::info!("{id}: ratio {:.4} in {:.2?}", s.ratio_mean, start.elapsed()),
                Err(e) => log::warn!("{id}: failed after {:.2?}: {e}", start.elapsed()),
            }
            ScreenRow { id, outcome }
        })
        .collect();
    if let Some(k) = cfg.top_k {
        let ratios: Vec<f64> = rows.iter().filter_map(|r| r.outcome.as_ref().ok().map(|s| s.ratio_mean)).collect();
        if let Some(cut) = top_k_cutoff(&ratios, k) {
            log::info!("top-{k} cutoff {cut}");
            for s in rows.iter_mut().filter_map(|r| r.outcome.as_mut().ok()) {
                s.is_periodic = s.ratio_mean >= cut;
            }
        }
    }
    rows
}
