use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDateTime;

use super::manifest::PlantManifest;
use super::series::{TimeSeries, STEP_MINUTES};
use crate::error::{Error, Result};

pub const POWER_CSV_HEADER: [&str; 2] = ["timestamp", "power_mw"];

const TIMESTAMP_FORMATS: [&str; 4] = [
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
];

pub fn parse_timestamp(text: &str) -> Option<NaiveDateTime> {
    let t = text.trim();
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(t, f).ok())
}

pub fn format_timestamp(ts: NaiveDateTime) -> String {
    ts.format("%Y-%m-%dT%H:%M:%S").to_string()
}

/// Reads a `timestamp,power_mw` CSV into a raw (MW) series.
///
/// Absent 5-minute slots become gaps. Duplicate or backward timestamps, and
/// stamps off the 5-minute grid, are data errors.
pub fn load_series(path: &Path, manifest: &PlantManifest) -> Result<TimeSeries> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_series(file, manifest)
}

pub fn read_series<R: Read>(reader: R, manifest: &PlantManifest) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.len() != 2 || headers.get(0) != Some("timestamp") || headers.get(1) != Some("power_mw") {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `timestamp,power_mw`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }

    let mut start: Option<NaiveDateTime> = None;
    let mut prev: Option<NaiveDateTime> = None;
    let mut values: Vec<f64> = Vec::new();
    let mut missing: Vec<bool> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let parse_err = |message: String| Error::Parse { line, message };
        if record.len() != 2 {
            return Err(parse_err(format!("expected 2 fields, found {}", record.len())));
        }
        let ts = parse_timestamp(&record[0]).ok_or_else(|| parse_err(format!("bad timestamp `{}`", &record[0])))?;
        let power: f64 = record[1]
            .parse()
            .map_err(|_| parse_err(format!("bad power value `{}`", &record[1])))?;

        if let Some(p) = prev {
            if ts <= p {
                return Err(Error::data(format!(
                    "line {line}: timestamp {ts} does not increase (previous {p})"
                )));
            }
        }
        let origin = *start.get_or_insert(ts);
        let minutes = (ts - origin).num_minutes();
        if (ts - origin).num_seconds() % 60 != 0 || minutes % STEP_MINUTES != 0 {
            return Err(Error::data(format!("line {line}: timestamp {ts} is off the 5-minute grid")));
        }
        let slot = (minutes / STEP_MINUTES) as usize;
        while values.len() < slot {
            values.push(f64::NAN);
            missing.push(true);
        }
        let bad = !power.is_finite();
        values.push(if bad { f64::NAN } else { power });
        missing.push(bad);
        prev = Some(ts);
    }
    let Some(start) = start else {
        return Err(Error::data(format!("plant {}: empty power file", manifest.plant_id)));
    };
    Ok(TimeSeries {
        plant_id: manifest.plant_id.clone(),
        start,
        values,
        missing,
        normalized_by: None,
    })
}

/// Writes a series in megawatts (`values × capacity` when normalized).
/// Missing slots are skipped, so they read back as gaps.
pub fn write_power_csv<W: Write>(writer: W, series: &TimeSeries) -> Result<()> {
    let scale = series.normalized_by.unwrap_or(1.0);
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::data(format!("csv write: {e}"));
    w.write_record(POWER_CSV_HEADER).map_err(csv_err)?;
    for (i, v) in series.values.iter().enumerate() {
        if series.missing[i] {
            continue;
        }
        w.write_record([format_timestamp(series.timestamp(i)), format!("{}", v * scale)])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::data(format!("csv flush: {e}")))?;
    Ok(())
}

/// Writes the capacity-normalized values as `timestamp,power_norm`.
pub fn write_normalized_csv<W: Write>(writer: W, series: &TimeSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::data(format!("csv write: {e}"));
    w.write_record(["timestamp", "power_norm"]).map_err(csv_err)?;
    for (i, v) in series.values.iter().enumerate() {
        w.write_record([format_timestamp(series.timestamp(i)), format!("{v}")])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::data(format!("csv flush: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plant() -> PlantManifest {
        PlantManifest::new("A", 13.0, 117.25, 32.65)
    }

    #[test]
    fn contiguous_fixture() {
        let text = "timestamp,power_mw\n\
                    2006-06-01T10:00:00,1.0\n\
                    2006-06-01T10:05:00,2.0\n\
                    2006-06-01T10:10:00,3.5\n\
                    2006-06-01T10:15:00,4.0\n";
        let s = read_series(text.as_bytes(), &plant()).unwrap();
        assert_eq!(s.values, vec![1.0, 2.0, 3.5, 4.0]);
        assert!(!s.has_gaps());
        assert_eq!(s.timestamp(3), parse_timestamp("2006-06-01T10:15:00").unwrap());
    }

    #[test]
    fn missing_slot_is_a_gap() {
        let text = "timestamp,power_mw\n\
                    2006-06-01T10:00:00,1.0\n\
                    2006-06-01T10:05:00,2.0\n\
                    2006-06-01T10:15:00,4.0\n";
        let s = read_series(text.as_bytes(), &plant()).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.gaps(), vec![2]);
        assert!(s.values[2].is_nan());
    }

    #[test]
    fn out_of_order_and_duplicates_rejected() {
        let text = "timestamp,power_mw\n2006-06-01T10:05:00,1.0\n2006-06-01T10:00:00,2.0\n";
        assert!(matches!(read_series(text.as_bytes(), &plant()), Err(Error::Data(_))));
        let text = "timestamp,power_mw\n2006-06-01T10:05:00,1.0\n2006-06-01T10:05:00,2.0\n";
        assert!(matches!(read_series(text.as_bytes(), &plant()), Err(Error::Data(_))));
    }

    #[test]
    fn malformed_row_reports_line() {
        let text = "timestamp,power_mw\n2006-06-01T10:00:00,1.0\n2006-06-01T10:05:00,abc\n";
        match read_series(text.as_bytes(), &plant()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_data_error() {
        let text = "timestamp,power_mw\n";
        assert!(matches!(read_series(text.as_bytes(), &plant()), Err(Error::Data(_))));
    }

    #[test]
    fn off_grid_rejected() {
        let text = "timestamp,power_mw\n2006-06-01T10:00:00,1.0\n2006-06-01T10:03:00,2.0\n";
        assert!(matches!(read_series(text.as_bytes(), &plant()), Err(Error::Data(_))));
    }
}
