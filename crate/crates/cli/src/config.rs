//! Run configuration for `screen`, assembled from (highest precedence first)
//! command-line flags, an optional `key = value` file and the profile
//! defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use gp_periodicity::fit::{Bounds, Param};
use gp_periodicity::periodicity::{DEFAULT_CUTOFF, DEFAULT_GRID_SIZE, DEFAULT_REALISATIONS};
use gp_periodicity::{Nu, DEFAULT_Q};
use thiserror::Error;

use crate::ingest::Layout;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("{path}:{line}: {message}")]
    File { path: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Parameter-bound profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    /// Expression profiles in hours: period in [20, 28], no trend.
    Gene,
    /// Unit-period signals with a constant trend and no aperiodic part.
    Benchmark,
    /// Read settings from `--config`; its `base` key picks gene or benchmark.
    CustomFile,
}

/// Profile whose model template and bounds are used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaseProfile {
    Gene,
    Benchmark,
}

#[derive(Args, Clone, Debug, Default)]
pub struct ScreenArgs {
    /// Input CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub layout: Option<Layout>,
    #[arg(long, value_enum)]
    pub profile: Option<Profile>,
    /// Settings file used with `--profile custom-file`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of Fourier frequencies.
    #[arg(long)]
    pub q: Option<usize>,
    /// Matérn regularity: 0.5, 1.5 or 2.5.
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub realisations: Option<usize>,
    /// Points of the grid the ratio is evaluated on.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Label the k series with the largest ratios as periodic.
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Report path; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub layout: Layout,
    pub base: BaseProfile,
    /// Bounds replacing the profile's, by parameter.
    pub bounds: BTreeMap<Param, Bounds>,
    pub q: usize,
    pub nu: Nu,
    pub n_restarts: usize,
    pub n_realisations: usize,
    pub grid_size: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub top_k: Option<usize>,
    pub cutoff: f64,
    /// Support of `T` for the ratio; the span of each series when `None`.
    pub interval: Option<(f64, f64)>,
}

impl RunConfig {
    /// Profile defaults with no input.
    pub fn defaults(base: BaseProfile) -> Self {
        Self {
            input: PathBuf::new(),
            layout: Layout::Matrix,
            base,
            bounds: BTreeMap::new(),
            q: DEFAULT_Q,
            nu: Nu::ThreeHalves,
            n_restarts: match base {
                BaseProfile::Gene => gp_periodicity::fit::GENE_RESTARTS,
                BaseProfile::Benchmark => gp_periodicity::fit::BENCHMARK_RESTARTS,
            },
            n_realisations: DEFAULT_REALISATIONS,
            grid_size: DEFAULT_GRID_SIZE,
            seed: 0,
            output: None,
            top_k: None,
            cutoff: DEFAULT_CUTOFF,
            interval: None,
        }
    }

    pub fn resolve(args: &ScreenArgs) -> Result<Self, ConfigError> {
        let profile = args.profile.unwrap_or(Profile::Gene);
        let file = match (profile, &args.config) {
            (Profile::CustomFile, Some(path)) => Some(ConfigFile::read(path)?),
            (Profile::CustomFile, None) => {
                return Err(ConfigError::Invalid("--profile custom-file requires --config".into()))
            }
            (_, Some(_)) => return Err(ConfigError::Invalid("--config is only read with --profile custom-file".into())),
            _ => None,
        };
        let base = match profile {
            Profile::Gene => BaseProfile::Gene,
            Profile::Benchmark => BaseProfile::Benchmark,
            Profile::CustomFile => file.as_ref().and_then(|f| f.base).unwrap_or(BaseProfile::Gene),
        };
        let mut cfg = Self::defaults(base);
        if let Some(f) = file {
            f.apply(&mut cfg);
        }
        macro_rules! take {
            ($field:ident, $arg:ident) => {
                if let Some(v) = args.$arg.clone() {
                    cfg.$field = v;
                }
            };
        }
        take!(input, input);
        take!(layout, layout);
        take!(q, q);
        take!(n_restarts, restarts);
        take!(n_realisations, realisations);
        take!(grid_size, grid);
        take!(seed, seed);
        take!(cutoff, cutoff);
        if let Some(nu) = args.nu {
            cfg.nu = parse_nu(nu)?;
        }
        if args.output.is_some() {
            cfg.output = args.output.clone();
        }
        if args.top_k.is_some() {
            cfg.top_k = args.top_k;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        if self.input.as_os_str().is_empty() {
            return bad("no input file given");
        }
        if self.q == 0 || self.n_restarts == 0 || self.n_realisations == 0 {
            return bad("q, restarts and realisations must be positive");
        }
        if self.grid_size < 10 {
            return bad("grid must hold at least 10 points");
        }
        if self.top_k == Some(0) {
            return bad("top-k must be positive");
        }
        if !self.cutoff.is_finite() {
            return bad("cutoff must be finite");
        }
        if let Some((a, b)) = self.interval {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return bad("interval must satisfy a < b");
            }
        }
        for p in self.bounds.keys() {
            let allowed = match self.base {
                BaseProfile::Gene => true,
                BaseProfile::Benchmark => !matches!(p, Param::SigmaA2 | Param::ThetaA),
            };
            if !allowed {
                return Err(ConfigError::Invalid(format!("{p} is not a parameter of the benchmark profile")));
            }
        }
        Ok(())
    }
}

fn parse_nu(nu: f64) -> Result<Nu, ConfigError> {
    Nu::from_f64(nu).map_err(|_| ConfigError::Invalid(format!("nu must be 0.5, 1.5 or 2.5, got {nu}")))
}

/// Parsed settings file: `key = value` lines, `#` starts a comment. Keys
/// mirror the flags (`input`, `layout`, `q`, `nu`, `restarts`,
/// `realisations`, `grid`, `seed`, `top_k`, `cutoff`, `output`), plus
/// `base = gene|benchmark`, `interval = a,b` and one `lower,upper` entry per
/// bounded parameter (`sigma_p2`, `theta_p`, `sigma_a2`, `theta_a`, `tau2`,
/// `lambda`). Relative paths resolve against the file's directory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    pub base: Option<BaseProfile>,
    pub input: Option<PathBuf>,
    pub layout: Option<Layout>,
    pub q: Option<usize>,
    pub nu: Option<Nu>,
    pub restarts: Option<usize>,
    pub realisations: Option<usize>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub top_k: Option<usize>,
    pub cutoff: Option<f64>,
    pub output: Option<PathBuf>,
    pub interval: Option<(f64, f64)>,
    pub bounds: BTreeMap<Param, Bounds>,
}

impl ConfigFile {
    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text =
            fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let dir = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, dir).map_err(|(line, message)| ConfigError::File { path: path.display().to_string(), line, message })
    }

    /// Errors carry the 1-based line number.
    pub fn parse(text: &str, dir: &Path) -> Result<Self, (usize, String)> {
        let mut out = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| (i + 1, m);
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got '{line}'")))?;
            let (key, value) = (key.trim().replace('-', "_"), value.trim());
            let num = |v: &str| v.parse::<f64>().map_err(|_| err(format!("{key}: '{v}' is not a number")));
            let count = |v: &str| v.parse::<usize>().map_err(|_| err(format!("{key}: '{v}' is not a count")));
            let pair = |v: &str| -> Result<(f64, f64), (usize, String)> {
                let (a, b) = v.split_once(',').ok_or_else(|| err(format!("{key}: expected lower,upper")))?;
                Ok((num(a.trim())?, num(b.trim())?))
            };
            match key.as_str() {
                "base" => {
                    out.base = Some(match value {
                        "gene" => BaseProfile::Gene,
                        "benchmark" => BaseProfile::Benchmark,
                        _ => return Err(err(format!("base must be gene or benchmark, got '{value}'"))),
                    })
                }
                "input" => out.input = Some(dir.join(value)),
                "output" => out.output = Some(dir.join(value)),
                "layout" => {
                    out.layout = Some(Layout::from_str(value, true).map_err(|_| err(format!("unknown layout '{value}'")))?)
                }
                "q" => out.q = Some(count(value)?),
                "nu" => out.nu = Some(parse_nu(num(value)?).map_err(|e| err(e.to_string()))?),
                "restarts" => out.restarts = Some(count(value)?),
                "realisations" => out.realisations = Some(count(value)?),
                "grid" => out.grid = Some(count(value)?),
                "seed" => out.seed = Some(value.parse().map_err(|_| err(format!("seed: '{value}' is not an integer")))?),
                "top_k" => out.top_k = Some(count(value)?),
                "cutoff" => out.cutoff = Some(num(value)?),
                "interval" => out.interval = Some(pair(value)?),
                other => {
                    let p = Param::from_name(other).ok_or_else(|| err(format!("unknown key '{other}'")))?;
                    let (lo, hi) = pair(value)?;
                    out.bounds.insert(p, Bounds::new(lo, hi).map_err(|e| err(e.to_string()))?);
                }
            }
        }
        Ok(out)
    }

    fn apply(self, cfg: &mut RunConfig) {
        if let Some(v) = self.input {
            cfg.input = v;
        }
        if let Some(v) = self.layout {
            cfg.layout = v;
        }
        if let Some(v) = self.q {
            cfg.q = v;
        }
        if let Some(v) = self.nu {
            cfg.nu = v;
        }
        if let Some(v) = self.restarts {
            cfg.n_restarts = v;
        }
        if let Some(v) = self.realisations {
            cfg.n_realisations = v;
        }
        if let Some(v) = self.grid {
            cfg.grid_size = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.cutoff {
            cfg.cutoff = v;
        }
        cfg.top_k = self.top_k.or(cfg.top_k);
        cfg.output = self.output.or(cfg.output.take());
        cfg.interval = self.interval.or(cfg.interval);
        cfg.bounds.extend(self.bounds);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args() -> ScreenArgs {
        ScreenArgs { input: Some("data.csv".into()), ..Default::default() }
    }

    #[test]
    fn gene_defaults() {
        let cfg = RunConfig::resolve(&args()).unwrap();
        assert_eq!(cfg.base, BaseProfile::Gene);
        assert_eq!((cfg.q, cfg.nu, cfg.n_restarts), (20, Nu::ThreeHalves, 50));
        assert_eq!((cfg.n_realisations, cfg.grid_size, cfg.cutoff), (1000, 500, 0.77));
        assert!(cfg.bounds.is_empty());
    }

    #[test]
    fn file_values_yield_to_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "# screen\nbase = gene\ninput = a.csv\nq = 8   # fewer\nnu = 2.5\nseed = 7\ntheta_p = 5, 50\n").unwrap();
        let a = ScreenArgs { profile: Some(Profile::CustomFile), config: Some(path), seed: Some(9), ..Default::default() };
        let cfg = RunConfig::resolve(&a).unwrap();
        assert_eq!(cfg.input, dir.path().join("a.csv"));
        assert_eq!((cfg.q, cfg.nu, cfg.seed), (8, Nu::FiveHalves, 9));
        assert_eq!(cfg.bounds[&Param::ThetaP], Bounds::new(5.0, 50.0).unwrap());
    }

    #[test]
    fn invalid_settings_are_rejected() {
        assert!(RunConfig::resolve(&ScreenArgs::default()).is_err());
        assert!(RunConfig::resolve(&ScreenArgs { nu: Some(1.0), ..args() }).is_err());
        assert!(RunConfig::resolve(&ScreenArgs { restarts: Some(0), ..args() }).is_err());
        assert!(RunConfig::resolve(&ScreenArgs { top_k: Some(0), ..args() }).is_err());
        assert!(RunConfig::resolve(&ScreenArgs { profile: Some(Profile::CustomFile), ..args() }).is_err());
        assert_eq!(ConfigFile::parse("q = 3\nbogus = 1\n", Path::new("")).unwrap_err().0, 2);
        assert!(ConfigFile::parse("lambda = 5,1\n", Path::new("")).is_err());
        assert!(ConfigFile::parse("q\n", Path::new("")).is_err());
    }
}
