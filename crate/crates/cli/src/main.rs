use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gp_periodicity::bench::{run_benchmark, write_table, BenchConfig, BenchModel, TestFunction};
use gp_periodicity::Nu;
use gp_periodicity_cli::report::write_report;
use gp_periodicity_cli::{ingest, screen, RunConfig, ScreenArgs};

const EXIT_ALL_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

/// Periodicity screening with decomposed Matérn Gaussian processes.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit and score every series of a CSV file.
    Screen(ScreenArgs),
    /// Run the test-function benchmark and print an RMSE table.
    Bench(BenchArgs),
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 50)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated test functions (cos, sumcos, square, triangle, diag, noise).
    #[arg(long, value_delimiter = ',')]
    functions: Option<Vec<String>>,
    /// Comma-separated models: cosopt, or a GP regularity 0.5, 1.5, 2.5.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn open_output(path: Option<&PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run_screen(args: &ScreenArgs) -> Result<ExitCode, String> {
    let cfg = RunConfig::resolve(args).map_err(|e| e.to_string())?;
    let series = ingest(&cfg.input, cfg.layout).map_err(|e| e.to_string())?;
    log::info!("{} series from {}", series.len(), cfg.input.display());
    let rows = screen(&series, &cfg);
    let mut out = open_output(cfg.output.as_ref()).map_err(|e| e.to_string())?;
    write_report(&rows, &mut out).map_err(|e| e.to_string())?;
    out.flush().map_err(|e| e.to_string())?;
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        log::warn!("{failed} of {} series failed", rows.len());
    }
    Ok(if !rows.is_empty() && failed == rows.len() { ExitCode::from(EXIT_ALL_FAILED) } else { ExitCode::SUCCESS })
}

fn run_bench(args: &BenchArgs) -> Result<ExitCode, String> {
    let functions = match &args.functions {
        Some(names) => names
            .iter()
            .map(|n| TestFunction::from_name(n.trim()).ok_or_else(|| format!("unknown test function '{n}'")))
            .collect::<Result<Vec<_>, _>>()?,
        None => TestFunction::ALL.to_vec(),
    };
    let models = match &args.models {
        Some(names) => names
            .iter()
            .map(|n| match n.trim() {
                m if m.eq_ignore_ascii_case("cosopt") => Ok(BenchModel::Cosopt),
                m => m
                    .parse::<f64>()
                    .ok()
                    .and_then(|v| Nu::from_f64(v).ok())
                    .map(BenchModel::Gp)
                    .ok_or_else(|| format!("unknown model '{m}'")),
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => BenchModel::ALL.to_vec(),
    };
    if args.repeats == 0 {
        return Err("repeats must be positive".into());
    }
    let mut cfg = BenchConfig::new(args.repeats, args.seed);
    if let Some(q) = args.q {
        cfg.q = q;
    }
    if let Some(r) = args.restarts {
        cfg.gp_restarts = r;
    }
    let rows = run_benchmark(&functions, &models, &cfg);
    let mut out = open_output(args.output.as_ref()).map_err(|e| e.to_string())?;
    write_table(&rows, &mut out).and_then(|_| out.flush()).map_err(|e| e.to_string())?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Screen(a) => run_screen(a),
        Command::Bench(a) => run_bench(a),
    };
    result.unwrap_or_else(|e| {
        log::error!("{e}");
        ExitCode::from(EXIT_CONFIG)
    })
}
