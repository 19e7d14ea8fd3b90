//! Command-line front end: CSV ingestion, batch screening and reports.

pub mod config;
pub mod ingest;
pub mod report;
pub mod screen;

pub use config::{ConfigError, RunConfig, ScreenArgs};
pub use ingest::{ingest, IngestError, Layout};
pub use screen::{screen, series_seed, ScreenRow, SeriesScore};
