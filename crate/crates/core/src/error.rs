use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported Matérn regularity {0}; expected 1/2, 3/2 or 5/2")]
    UnsupportedNu(f64),

    #[error("Cholesky factorisation failed for {what} (jitter cap {cap:e} exceeded)")]
    FactorizationFailure { what: &'static str, cap: f64 },

    #[error("kernel has no {0} component")]
    MissingComponent(&'static str),

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("{skipped} of {total} realisations had a degenerate total variance")]
    DegenerateDenominator { skipped: usize, total: usize },

    #[error("all {0} optimisation restarts failed")]
    AllRestartsFailed(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
