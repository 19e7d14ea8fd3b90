//! Benchmark of 1-periodic test functions on `[0, 3]`: noisy training
//! samples, RMSE of each model's prediction against the noise-free function.

use std::fmt;
use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::cosopt::{cosopt_fit, default_omega_grid, CosoptOptions};
use crate::error::Result;
use crate::fit::{benchmark_config, benchmark_template, fit, BENCHMARK_RESTARTS};
use crate::gp::Dataset;
use crate::matern::Nu;
use crate::periodic::DEFAULT_Q;
use crate::scalar::linspace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TestFunction {
    Cos,
    SumCos,
    Square,
    Triangle,
    Diag,
    Noise,
}

fn frac(t: f64) -> f64 {
    t - t.floor()
}

impl TestFunction {
    pub const ALL: [TestFunction; 6] = [
        TestFunction::Cos,
        TestFunction::SumCos,
        TestFunction::Square,
        TestFunction::Triangle,
        TestFunction::Diag,
        TestFunction::Noise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::Cos => "cos",
            TestFunction::SumCos => "sumcos",
            TestFunction::Square => "square",
            TestFunction::Triangle => "triangle",
            TestFunction::Diag => "diag",
            TestFunction::Noise => "noise",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Noise-free value; `noise` is identically zero.
    pub fn eval(self, t: f64) -> f64 {
        use std::f64::consts::TAU;
        match self {
            TestFunction::Cos => (TAU * t).cos(),
            TestFunction::SumCos => 0.5 * ((TAU * t).cos() + (2.0 * TAU * t).cos()),
            TestFunction::Square => {
                if frac(t) < 0.5 {
                    1.0
                } else {
                    -1.0
                }
            }
            TestFunction::Triangle => 4.0 * (frac(t) - 0.5).abs() - 1.0,
            TestFunction::Diag => 2.0 * frac(t) - 1.0,
            TestFunction::Noise => 0.0,
        }
    }

    /// Variance of the observation noise.
    pub fn noise_variance(self) -> f64 {
        match self {
            TestFunction::Noise => 1.0,
            _ => 0.1,
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BenchModel {
    Cosopt,
    Gp(Nu),
}

impl BenchModel {
    pub const ALL: [BenchModel; 4] =
        [BenchModel::Cosopt, BenchModel::Gp(Nu::Half), BenchModel::Gp(Nu::ThreeHalves), BenchModel::Gp(Nu::FiveHalves)];

    pub fn name(self) -> String {
        match self {
            BenchModel::Cosopt => "COSOPT".into(),
            BenchModel::Gp(nu) => format!("GP nu={nu}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub n_repeats: usize,
    pub seed: u64,
    /// Multiplies every noise variance; 0 gives a noise-free control run.
    pub noise_scale: f64,
    pub q: usize,
    pub gp_restarts: usize,
}

impl BenchConfig {
    pub fn new(n_repeats: usize, seed: u64) -> Self {
        Self {
            n_train: 50,
            n_test: 500,
            n_repeats,
            seed,
            noise_scale: 1.0,
            q: DEFAULT_Q,
            gp_restarts: BENCHMARK_RESTARTS,
        }
    }
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> f64 {
    let sse: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    (sse / pred.len() as f64).sqrt()
}

/// Noisy training set of repeat `repeat`; every model sees the same data.
pub fn training_set(f: TestFunction, cfg: &BenchConfig, repeat: usize) -> Dataset<f64> {
    let fi = TestFunction::ALL.iter().position(|&g| g == f).expect("listed");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream((fi * cfg.n_repeats + repeat) as u64);
    let sd = (f.noise_variance() * cfg.noise_scale).sqrt();
    let xs = linspace(0.0, 3.0, cfg.n_train);
    let ys = xs
        .iter()
        .map(|&t| {
            let e: f64 = StandardNormal.sample(&mut rng);
            f.eval(t) + sd * e
        })
        .collect();
    Dataset::new(xs, ys).expect("valid training set")
}

/// RMSE of one model on one training set, evaluated on the test grid.
pub fn evaluate(model: BenchModel, data: &Dataset<f64>, f: TestFunction, cfg: &BenchConfig, seed: u64) -> Result<f64> {
    let test = linspace(0.0, 3.0, cfg.n_test);
    let truth: Vec<f64> = test.iter().map(|&t| f.eval(t)).collect();
    let pred: Vec<f64> = match model {
        BenchModel::Cosopt => {
            let opts = CosoptOptions { omega_grid: default_omega_grid(), fit_slope: false };
            let c = cosopt_fit(data.inputs(), data.outputs(), &opts)?;
            test.iter().map(|&t| c.predict(t)).collect()
        }
        BenchModel::Gp(nu) => {
            let template = benchmark_template(nu, cfg.q)?;
            let mut fc = benchmark_config(data, seed)?;
            fc.n_restarts = cfg.gp_restarts;
            let fitted = fit(data, &template, &fc)?;
            fitted.posterior(data)?.predict(&test).0
        }
    };
    Ok(rmse(&pred, &truth))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub function: TestFunction,
    pub model: BenchModel,
    pub mean_rmse: f64,
    pub sd_rmse: f64,
    pub n_repeats: usize,
    /// Repeats whose fit failed; they are excluded from the statistics.
    pub n_failed: usize,
}

/// Runs every (function, model, repeat) cell and summarises RMSE per
/// (function, model). Failed cells are recorded, not fatal.
pub fn run_benchmark(functions: &[TestFunction], models: &[BenchModel], cfg: &BenchConfig) -> Vec<BenchRow> {
    let cells: Vec<(usize, usize, usize)> = (0..functions.len())
        .flat_map(|fi| (0..models.len()).flat_map(move |mi| (0..cfg.n_repeats).map(move |r| (fi, mi, r))))
        .collect();
    let results: Vec<f64> = cells
        .par_iter()
        .map(|&(fi, mi, r)| {
            let f = functions[fi];
            let data = training_set(f, cfg, r);
            let seed = cfg.seed ^ ((fi * cfg.n_repeats + r) as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            evaluate(models[mi], &data, f, cfg, seed).unwrap_or(f64::NAN)
        })
        .collect();
    results
        .chunks(cfg.n_repeats.max(1))
        .zip(cells.chunks(cfg.n_repeats.max(1)))
        .map(|(vals, cell)| {
            let (fi, mi, _) = cell[0];
            let ok: Vec<f64> = vals.iter().copied().filter(|v| v.is_finite()).collect();
            let n = ok.len() as f64;
            let mean = if ok.is_empty() { f64::NAN } else { ok.iter().sum::<f64>() / n };
            let sd = if ok.len() > 1 {
                (ok.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                f64::NAN
            };
            BenchRow {
                function: functions[fi],
                model: models[mi],
                mean_rmse: mean,
                sd_rmse: sd,
                n_repeats: vals.len(),
                n_failed: vals.len() - ok.len(),
            }
        })
        .collect()
}

/// CSV with columns `function,model,mean_rmse,sd_rmse,n_repeats`.
pub fn write_table<W: Write>(rows: &[BenchRow], mut out: W) -> io::Result<()> {
    writeln!(out, "function,model,mean_rmse,sd_rmse,n_repeats")?;
    for r in rows {
        writeln!(out, "{},{},{:.6},{:.6},{}", r.function, r.model.name(), r.mean_rmse, r.sd_rmse, r.n_repeats)?;
    }
    Ok(())
}
