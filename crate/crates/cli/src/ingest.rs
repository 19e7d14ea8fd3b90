//! CSV ingestion. Two layouts are understood:
//!
//! * `long`: a header naming a time column (`time` or `t`), a value column
//!   (`value` or `y`) and optionally an `id` column; one observation per row.
//! * `matrix`: the first row holds a label followed by the time points, every
//!   further row an id followed by one value per time point.
//!
//! Empty cells are dropped per series, so series may be irregularly sampled.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use gp_periodicity::Dataset;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Layout {
    Long,
    Matrix,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    /// `row` and `column` are 1-based and count the header.
    #[error("row {row}, column {column}: {message}")]
    Parse { row: usize, column: usize, message: String },
    #[error("series '{0}' has fewer than 2 observations")]
    EmptySeries(String),
}

/// Id given to the only series of a long file without an id column.
pub const DEFAULT_ID: &str = "series";

pub fn ingest(path: &Path, layout: Layout) -> Result<Vec<Dataset<f64>>, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
    ingest_reader(file, layout)
}

pub fn ingest_reader<R: Read>(reader: R, layout: Layout) -> Result<Vec<Dataset<f64>>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| IngestError::Parse { row: i + 1, column: 0, message: e.to_string() })?;
        rows.push(rec.iter().map(str::to_owned).collect::<Vec<_>>());
    }
    let series = match layout {
        Layout::Long => long(&rows)?,
        Layout::Matrix => matrix(&rows)?,
    };
    series
        .into_iter()
        .map(|(id, xs, ys)| Dataset::new(xs, ys).map(|d| d.with_id(id.clone())).map_err(|_| IngestError::EmptySeries(id)))
        .collect()
}

type Raw = (String, Vec<f64>, Vec<f64>);

fn number(cell: &str, row: usize, column: usize) -> Result<f64, IngestError> {
    cell.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| IngestError::Parse { row, column, message: format!("'{cell}' is not a finite number") })
}

fn long(rows: &[Vec<String>]) -> Result<Vec<Raw>, IngestError> {
    let header = rows.first().ok_or(IngestError::Parse { row: 1, column: 1, message: "empty file".into() })?;
    let find = |names: &[&str]| header.iter().position(|h| names.iter().any(|n| h.eq_ignore_ascii_case(n)));
    let missing = |what: &str| IngestError::Parse { row: 1, column: 0, message: format!("no {what} column in header") };
    let t_col = find(&["time", "t"]).ok_or_else(|| missing("time"))?;
    let y_col = find(&["value", "y"]).ok_or_else(|| missing("value"))?;
    let id_col = find(&["id"]);
    let mut out: Vec<Raw> = Vec::new();
    for (i, row) in rows.iter().enumerate().skip(1) {
        let cell = |c: usize| row.get(c).map(String::as_str).unwrap_or("");
        if row.iter().all(|c| c.is_empty()) {
            continue;
        }
        let id = id_col.map_or(DEFAULT_ID, |c| cell(c)).to_owned();
        let y = cell(y_col);
        let slot = match out.iter().position(|s| s.0 == id) {
            Some(p) => p,
            None => {
                out.push((id, Vec::new(), Vec::new()));
                out.len() - 1
            }
        };
        if y.is_empty() {
            continue;
        }
        out[slot].1.push(number(cell(t_col), i + 1, t_col + 1)?);
        out[slot].2.push(number(y, i + 1, y_col + 1)?);
    }
    Ok(out)
}

fn matrix(rows: &[Vec<String>]) -> Result<Vec<Raw>, IngestError> {
    let header = rows.first().ok_or(IngestError::Parse { row: 1, column: 1, message: "empty file".into() })?;
    let times = header[1..]
        .iter()
        .enumerate()
        .map(|(j, c)| number(c, 1, j + 2))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut out = Vec::new();
    for (i, row) in rows.iter().enumerate().skip(1) {
        if row.iter().all(|c| c.is_empty()) {
            continue;
        }
        if row.len() > times.len() + 1 {
            return Err(IngestError::Parse {
                row: i + 1,
                column: times.len() + 2,
                message: format!("{} cells but only {} time points", row.len() - 1, times.len()),
            });
        }
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (j, cell) in row.iter().enumerate().skip(1) {
            if !cell.is_empty() {
                xs.push(times[j - 1]);
                ys.push(number(cell, i + 1, j + 1)?);
            }
        }
        out.push((row[0].clone(), xs, ys));
    }
    Ok(out)
}

/// Writes series in the long layout with 17 significant digits, enough for
/// an exact round trip.
pub fn write_long<W: Write>(series: &[Dataset<f64>], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "time", "value"])?;
    for d in series {
        let id = d.id().unwrap_or(DEFAULT_ID);
        for (t, y) in d.inputs().iter().zip(d.outputs()) {
            w.write_record([id, &format!("{t:.16e}"), &format!("{y:.16e}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn long_single_series() {
        let mut text = String::from("time,value\n");
        for i in 0..13 {
            text.push_str(&format!("{},{}\n", 26 + 4 * i, 0.1 * i as f64));
        }
        let ds = ingest_reader(text.as_bytes(), Layout::Long).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].len(), 13);
        assert_eq!(ds[0].id(), Some(DEFAULT_ID));
    }

    #[test]
    fn long_grouped_by_id_in_order() {
        let text = "id,t,y\nb,0,1\na,0,2\nb,1,3\na,1,\na,2,5\n";
        let ds = ingest_reader(text.as_bytes(), Layout::Long).unwrap();
        assert_eq!(ds.iter().map(|d| d.id().unwrap()).collect::<Vec<_>>(), ["b", "a"]);
        assert_eq!(ds[1].inputs(), [0.0, 2.0]);
    }

    #[test]
    fn matrix_drops_blanks() {
        let header: Vec<String> = (0..13).map(|i| (26 + 4 * i).to_string()).collect();
        let mut text = format!("gene,{}\n", header.join(","));
        let full: Vec<String> = (0..13).map(|i| i.to_string()).collect();
        text.push_str(&format!("g1,{}\n", full.join(",")));
        let mut gap = full.clone();
        gap[3] = String::new();
        text.push_str(&format!("g2,{}\n", gap.join(",")));
        let mut tail = full.clone();
        tail[12] = String::new();
        text.push_str(&format!("g3,{}\n", tail.join(",")));
        let ds = ingest_reader(text.as_bytes(), Layout::Matrix).unwrap();
        assert_eq!(ds.iter().map(|d| d.len()).collect::<Vec<_>>(), [13, 12, 12]);
        assert_eq!(ds[1].inputs()[3], 42.0);
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = ingest_reader("time,value\n1,2\n2,abc\n".as_bytes(), Layout::Long).unwrap_err();
        assert!(matches!(err, IngestError::Parse { row: 3, column: 2, .. }), "{err}");
        let err = ingest_reader("g,1,x\n".as_bytes(), Layout::Matrix).unwrap_err();
        assert!(matches!(err, IngestError::Parse { row: 1, column: 3, .. }));
        let err = ingest_reader("id,t,value\na,1,2\n".as_bytes(), Layout::Long).unwrap_err();
        assert!(matches!(err, IngestError::EmptySeries(ref id) if id == "a"));
        assert!(ingest_reader("x,y2\n1,2\n".as_bytes(), Layout::Long).is_err());
    }
}
