#![allow(dead_code)]

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Sampling times of the screening design: every 4 h from 26 to 74 h.
pub fn design_times() -> Vec<f64> {
    (0..13).map(|i| 26.0 + 4.0 * i as f64).collect()
}

pub struct Synthetic {
    pub ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub periodic: Vec<bool>,
}

/// `n_periodic` series `sin(2πt/24) + ε` followed by `n_noise` series of
/// pure noise, all with noise standard deviation `sd`.
pub fn synthetic(n_periodic: usize, n_noise: usize, sd: f64, seed: u64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sd).unwrap();
    let t = design_times();
    let mut out = Synthetic { ids: Vec::new(), values: Vec::new(), periodic: Vec::new() };
    for i in 0..n_periodic + n_noise {
        let periodic = i < n_periodic;
        let id = if periodic { format!("per{i:02}") } else { format!("noise{:02}", i - n_periodic) };
        let y = t
            .iter()
            .map(|&x| if periodic { (TAU * x / 24.0).sin() } else { 0.0 } + noise.sample(&mut rng))
            .collect();
        out.ids.push(id);
        out.values.push(y);
        out.periodic.push(periodic);
    }
    out
}

/// Matrix-layout CSV of the given rows, in the given order.
pub fn matrix_csv(times: &[f64], ids: &[String], values: &[Vec<f64>], order: &[usize]) -> String {
    let header: Vec<String> = times.iter().map(|t| format!("{t}")).collect();
    let mut s = format!("gene,{}\n", header.join(","));
    for &i in order {
        let cells: Vec<String> = values[i].iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&format!("{},{}\n", ids[i], cells.join(",")));
    }
    s
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_gpper"))
}

pub fn run_screen(input: &Path, output: &Path, extra: &[&str]) -> Output {
    Command::new(bin())
        .arg("screen")
        .arg("--input")
        .arg(input)
        .arg("--output")
        .arg(output)
        .args(extra)
        .env("RUST_LOG", "warn")
        .output()
        .expect("run binary")
}

/// Report rows as (id, ratio_mean text, full line).
pub fn report_rows(path: &Path) -> Vec<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records().map(|r| r.unwrap().iter().map(str::to_owned).collect()).collect()
}
