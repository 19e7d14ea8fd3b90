use gp_periodicity::Dataset;
use gp_periodicity_cli::ingest::{ingest, ingest_reader, write_long, IngestError, Layout};
use proptest::prelude::*;

#[test]
fn long_file_with_13_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.csv");
    let mut text = String::from("time,value\n");
    for i in 0..13 {
        text.push_str(&format!("{},{}\n", 26 + 4 * i, (i as f64 * 0.7).sin()));
    }
    std::fs::write(&path, text).unwrap();
    let ds = ingest(&path, Layout::Long).unwrap();
    assert_eq!(ds.len(), 1);
    assert_eq!(ds[0].len(), 13);
}

#[test]
fn matrix_with_blanks() {
    let times: Vec<String> = (0..13).map(|i| (26 + 4 * i).to_string()).collect();
    let mut text = format!("gene,{}\n", times.join(","));
    for (g, blank) in [("a", None), ("b", Some(0)), ("c", Some(7))] {
        let cells: Vec<String> =
            (0..13).map(|j| if Some(j) == blank { String::new() } else { format!("{}", j as f64 / 3.0) }).collect();
        text.push_str(&format!("{g},{}\n", cells.join(",")));
    }
    let ds = ingest_reader(text.as_bytes(), Layout::Matrix).unwrap();
    assert_eq!(ds.iter().map(Dataset::len).collect::<Vec<_>>(), [13, 12, 12]);
    assert_eq!(ds[1].inputs()[0], 30.0);
    assert!(!ds[2].inputs().contains(&54.0));
}

#[test]
fn missing_file_and_short_series() {
    let err = ingest(std::path::Path::new("/nonexistent/x.csv"), Layout::Long).unwrap_err();
    assert!(matches!(err, IngestError::Io { .. }));
    let err = ingest_reader("g,1,2,3\na,1,,\n".as_bytes(), Layout::Matrix).unwrap_err();
    assert!(matches!(err, IngestError::EmptySeries(_)));
}

proptest! {
    #[test]
    fn emit_then_ingest_is_bit_exact(
        series in prop::collection::vec(prop::collection::vec((-1e6f64..1e6, any::<f64>()), 2..20), 1..4)
    ) {
        let ds: Vec<Dataset<f64>> = series
            .iter()
            .enumerate()
            .map(|(i, pts)| {
                let ys = pts.iter().map(|p| if p.1.is_finite() { p.1 } else { 0.0 }).collect();
                Dataset::new(pts.iter().map(|p| p.0).collect(), ys).unwrap().with_id(format!("s{i}"))
            })
            .collect();
        let mut buf = Vec::new();
        write_long(&ds, &mut buf).unwrap();
        let back = ingest_reader(buf.as_slice(), Layout::Long).unwrap();
        prop_assert_eq!(back.len(), ds.len());
        for (a, b) in ds.iter().zip(&back) {
            prop_assert_eq!(a.id(), b.id());
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(a.inputs()), bits(b.inputs()));
            prop_assert_eq!(bits(a.outputs()), bits(b.outputs()));
        }
    }
}
