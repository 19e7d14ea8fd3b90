//! Screening report CSV. Numbers are written with 17 significant digits.

use std::io::Write;

use crate::screen::ScreenRow;

pub const HEADER: [&str; 8] =
    ["id", "ratio_mean", "ratio_std", "lambda_hat", "neg2loglik", "jitter_used", "is_periodic", "error"];

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Failed series keep their row with empty numbers and the error message.
pub fn write_report<W: Write>(rows: &[ScreenRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        match &r.outcome {
            Ok(s) => w.write_record([
                r.id.clone(),
                num(s.ratio_mean),
                num(s.ratio_std),
                s.lambda_hat.map(num).unwrap_or_default(),
                num(s.neg2_log_likelihood),
                num(s.jitter_used),
                s.is_periodic.to_string(),
                String::new(),
            ])?,
            Err(e) => w.write_record([r.id.as_str(), "", "", "", "", "", "", e.as_str()])?,
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::screen::SeriesScore;

    #[test]
    fn rows_round_trip_exactly() {
        let score = SeriesScore {
            ratio_mean: 0.1 + 0.2,
            ratio_std: 1.0 / 3.0,
            lambda_hat: Some(24.000000000000004),
            neg2_log_likelihood: -12.5,
            jitter_used: 0.0,
            is_periodic: false,
        };
        let rows = vec![
            ScreenRow { id: "a".into(), outcome: Ok(score.clone()) },
            ScreenRow { id: "b,c".into(), outcome: Err("too few points".into()) },
        ];
        let mut buf = Vec::new();
        write_report(&rows, &mut buf).unwrap();
        let mut rdr = csv::Reader::from_reader(buf.as_slice());
        let recs: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0][1].parse::<f64>().unwrap(), score.ratio_mean);
        assert_eq!(recs[0][2].parse::<f64>().unwrap(), score.ratio_std);
        assert_eq!(recs[0][3].parse::<f64>().unwrap(), 24.000000000000004);
        assert_eq!(&recs[1][0], "b,c");
        assert_eq!(&recs[1][7], "too few points");
    }
}
