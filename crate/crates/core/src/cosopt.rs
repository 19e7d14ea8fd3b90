//! COSOPT-style baseline `y = α + βt + γ cos(ωt + φ) + ε`: a linear trend
//! by ordinary least squares, then a single cosine fitted to the detrended
//! residuals over a frequency grid and refined by golden-section search.

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};

/// Grid points on each side of the residual optimum re-scored jointly.
const LOCAL_SCAN: usize = 10;

/// Frequency grid of `n` angular frequencies whose periods are
/// log-spaced over `[p_min, p_max]`.
pub fn omega_grid(n: usize, p_min: f64, p_max: f64) -> Vec<f64> {
    let (lo, hi) = (p_min.ln(), p_max.ln());
    (0..n)
        .map(|i| {
            let p = if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
            std::f64::consts::TAU / p.exp()
        })
        .collect()
}

/// 200 periods between 0.2 and 5.
pub fn default_omega_grid() -> Vec<f64> {
    omega_grid(200, 0.2, 5.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CosoptFit {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub omega: f64,
    pub phi: f64,
    /// Mean squared residual on the training data.
    pub mse: f64,
}

impl CosoptFit {
    pub fn predict(&self, t: f64) -> f64 {
        self.alpha + self.beta * t + self.gamma * (self.omega * t + self.phi).cos()
    }

    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CosoptOptions {
    pub omega_grid: Vec<f64>,
    /// Estimate the slope; when false `β = 0`.
    pub fit_slope: bool,
}

impl Default for CosoptOptions {
    fn default() -> Self {
        Self { omega_grid: default_omega_grid(), fit_slope: true }
    }
}

/// Least squares on the given columns; `None` when the normal equations
/// are singular.
fn least_squares(cols: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let p = cols.len();
    let xtx = Matrix::from_fn(p, p, |i, j| cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum());
    let xty: Vec<f64> = cols.iter().map(|c| c.iter().zip(y).map(|(a, b)| a * b).sum()).collect();
    let chol = Cholesky::try_new(&xtx)?;
    let coef = chol.solve(&xty);
    let sse: f64 = (0..y.len())
        .map(|r| {
            let fit: f64 = coef.iter().zip(cols).map(|(c, col)| c * col[r]).sum();
            (y[r] - fit).powi(2)
        })
        .sum();
    Some((coef, sse / y.len() as f64))
}

fn trend_columns(t: &[f64], fit_slope: bool) -> Vec<Vec<f64>> {
    let mut cols = vec![vec![1.0; t.len()]];
    if fit_slope {
        cols.push(t.to_vec());
    }
    cols
}

fn cos_sin(t: &[f64], omega: f64) -> [Vec<f64>; 2] {
    [t.iter().map(|x| (omega * x).cos()).collect(), t.iter().map(|x| (omega * x).sin()).collect()]
}

/// Joint least squares of trend and cosine at a fixed frequency.
fn joint_fit(t: &[f64], y: &[f64], omega: f64, fit_slope: bool) -> Option<(Vec<f64>, f64)> {
    let mut cols = trend_columns(t, fit_slope);
    cols.extend(cos_sin(t, omega));
    least_squares(&cols, y)
}

pub fn cosopt_fit(t: &[f64], y: &[f64], opts: &CosoptOptions) -> Result<CosoptFit> {
    if t.len() != y.len() {
        return Err(Error::InvalidParameter("inputs and outputs differ in length".into()));
    }
    if t.len() < 4 {
        return Err(Error::InvalidParameter("COSOPT needs at least 4 observations".into()));
    }
    if opts.omega_grid.is_empty() || opts.omega_grid.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidParameter("frequency grid must hold positive values".into()));
    }
    let t_min = t.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if t_max <= t_min {
        return Err(Error::DegenerateDesign("all inputs are equal".into()));
    }

    let trend_cols = trend_columns(t, opts.fit_slope);
    let (trend, _) =
        least_squares(&trend_cols, y).ok_or_else(|| Error::DegenerateDesign("singular trend design".into()))?;
    let resid: Vec<f64> = (0..t.len())
        .map(|i| y[i] - trend.iter().zip(&trend_cols).map(|(c, col)| c * col[i]).sum::<f64>())
        .collect();

    let mut grid = opts.omega_grid.clone();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let scores: Vec<f64> = grid
        .iter()
        .map(|&w| least_squares(&cos_sin(t, w), &resid).map_or(f64::INFINITY, |(_, mse)| mse))
        .collect();
    let best = (0..grid.len())
        .min_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("not NaN"))
        .expect("non-empty grid");
    if !scores[best].is_finite() {
        return Err(Error::DegenerateDesign("no frequency on the grid gives a solvable fit".into()));
    }

    // Local search on the joint model: detrending first biases the grid
    // optimum when the span is not a whole number of periods, so scan the
    // neighbouring grid points before the golden-section step.
    let objective = |w: f64| joint_fit(t, y, w, opts.fit_slope).map_or(f64::INFINITY, |(_, mse)| mse);
    let near = best.saturating_sub(LOCAL_SCAN)..(best + LOCAL_SCAN + 1).min(grid.len());
    let best = near
        .map(|i| (objective(grid[i]), i))
        .fold((f64::INFINITY, best), |acc, x| if x.0 < acc.0 { x } else { acc })
        .1;
    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(grid.len() - 1)];
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (objective(x1), objective(x2));
    for _ in 0..100 {
        if hi - lo <= 1e-13 * hi {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = objective(x2);
        }
    }
    let mut omega = if f1 <= f2 { x1 } else { x2 };
    if objective(grid[best]) < objective(omega) {
        omega = grid[best];
    }
    let (coef, mse) = joint_fit(t, y, omega, opts.fit_slope)
        .ok_or_else(|| Error::DegenerateDesign("singular joint design".into()))?;
    let (alpha, beta, a, b) = if opts.fit_slope {
        (coef[0], coef[1], coef[2], coef[3])
    } else {
        (coef[0], 0.0, coef[1], coef[2])
    };
    // a cos(ωt) + b sin(ωt) = γ cos(ωt + φ)
    Ok(CosoptFit { alpha, beta, gamma: a.hypot(b), omega, phi: (-b).atan2(a), mse })
}
