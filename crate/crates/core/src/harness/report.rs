use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricsReport;

/// One evaluated (plant, horizon, protocol, model, fraction, seed) cell.
///
/// For zero-shot rows `plant` is the target and `source` the plant the model
/// was trained on; other protocols leave `source` empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub plant: String,
    pub horizon: usize,
    pub protocol: String,
    pub model: String,
    pub source: String,
    pub fraction: Option<f64>,
    pub seed: u64,
    pub input_len: usize,
    pub train_windows: usize,
    pub test_windows: usize,
    pub mse: f64,
    pub mae: f64,
    pub r2_raw: f64,
    pub r2_reported: f64,
    pub smape: f64,
}

impl ReportRow {
    pub fn set_metrics(&mut self, m: &MetricsReport) {
        self.mse = m.mse;
        self.mae = m.mae;
        self.r2_raw = m.r2_raw;
        self.r2_reported = m.r2_reported;
        self.smape = m.smape;
    }
}

/// Orders rows by protocol, source, plant, horizon, model, fraction, seed.
pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| {
        (&a.protocol, &a.source, &a.plant, a.horizon, &a.model)
            .cmp(&(&b.protocol, &b.source, &b.plant, b.horizon, &b.model))
            .then(a.fraction.unwrap_or(-1.0).total_cmp(&b.fraction.unwrap_or(-1.0)))
            .then(a.seed.cmp(&b.seed))
    });
}

fn csv_err(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::Parse {
            line: p.line() as usize,
            message: e.to_string(),
        },
        None => Error::format(e.to_string()),
    }
}

pub fn write_csv<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::format(e.to_string()))?;
    Ok(())
}

pub fn write_report(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(std::io::BufWriter::new(file), rows)
}

pub fn read_report<R: Read>(reader: R) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

pub fn load_report(path: &Path) -> Result<Vec<ReportRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_report(file)
}

/// Rank of a model within its comparison group for one metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flag {
    Best,
    Second,
    #[serde(rename = "")]
    None,
}

/// Mean metrics of one (protocol, scope, horizon, fraction, model) group.
///
/// `scope` is `all` for pooled plants, or `S->T` for a zero-shot pair,
/// which stays separate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub protocol: String,
    pub scope: String,
    pub horizon: usize,
    pub fraction: Option<f64>,
    pub model: String,
    pub plants: usize,
    pub rows: usize,
    pub mse: f64,
    pub mae: f64,
    pub r2_raw: f64,
    pub r2_reported: f64,
    pub smape: f64,
    pub mse_flag: Flag,
    pub mae_flag: Flag,
    pub r2_flag: Flag,
    pub smape_flag: Flag,
}

type GroupKey = (String, String, usize, Option<u64>, String);

/// Averages rows over plants and seeds, then flags the best and second-best
/// model per metric among rows sharing protocol, scope, horizon and fraction.
pub fn summarize(rows: &[ReportRow]) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(Error::config("report has no rows to summarize"));
    }
    let mut groups: BTreeMap<GroupKey, Vec<&ReportRow>> = BTreeMap::new();
    for r in rows {
        let scope = if r.source.is_empty() {
            "all".to_string()
        } else {
            format!("{}->{}", r.source, r.plant)
        };
        let key = (r.protocol.clone(), scope, r.horizon, r.fraction.map(f64::to_bits), r.model.clone());
        groups.entry(key).or_default().push(r);
    }
    let mut out: Vec<SummaryRow> = groups
        .into_iter()
        .map(|((protocol, scope, horizon, fraction, model), members)| {
            let n = members.len() as f64;
            let mean = |f: fn(&ReportRow) -> f64| members.iter().map(|r| f(r)).sum::<f64>() / n;
            let mut plants: Vec<&str> = members.iter().map(|r| r.plant.as_str()).collect();
            plants.sort_unstable();
            plants.dedup();
            SummaryRow {
                protocol,
                scope,
                horizon,
                fraction: fraction.map(f64::from_bits),
                model,
                plants: plants.len(),
                rows: members.len(),
                mse: mean(|r| r.mse),
                mae: mean(|r| r.mae),
                r2_raw: mean(|r| r.r2_raw),
                r2_reported: mean(|r| r.r2_reported),
                smape: mean(|r| r.smape),
                mse_flag: Flag::None,
                mae_flag: Flag::None,
                r2_flag: Flag::None,
                smape_flag: Flag::None,
            }
        })
        .collect();

    let mut start = 0;
    while start < out.len() {
        let same = |a: &SummaryRow, b: &SummaryRow| {
            a.protocol == b.protocol
                && a.scope == b.scope
                && a.horizon == b.horizon
                && a.fraction.map(f64::to_bits) == b.fraction.map(f64::to_bits)
        };
        let mut end = start + 1;
        while end < out.len() && same(&out[start], &out[end]) {
            end += 1;
        }
        let group = &mut out[start..end];
        flag(group, |r| r.mse, false, |r, f| r.mse_flag = f);
        flag(group, |r| r.mae, false, |r, f| r.mae_flag = f);
        flag(group, |r| r.r2_reported, true, |r, f| r.r2_flag = f);
        flag(group, |r| r.smape, false, |r, f| r.smape_flag = f);
        start = end;
    }
    Ok(out)
}

/// Ties share a rank; second place is the next distinct value.
fn flag(group: &mut [SummaryRow], value: fn(&SummaryRow) -> f64, higher_is_better: bool, set: fn(&mut SummaryRow, Flag)) {
    let mut values: Vec<f64> = group.iter().map(value).filter(|v| v.is_finite()).collect();
    values.sort_by(|a, b| if higher_is_better { b.total_cmp(a) } else { a.total_cmp(b) });
    values.dedup();
    for r in group.iter_mut() {
        let v = value(r);
        let f = match values.iter().position(|x| *x == v) {
            Some(0) => Flag::Best,
            Some(1) => Flag::Second,
            _ => Flag::None,
        };
        set(r, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(plant: &str, model: &str, seed: u64, mse: f64) -> ReportRow {
        ReportRow {
            plant: plant.into(),
            horizon: 12,
            protocol: "short".into(),
            model: model.into(),
            source: String::new(),
            fraction: None,
            seed,
            input_len: 24,
            train_windows: 10,
            test_windows: 5,
            mse,
            mae: mse * 2.0,
            r2_raw: 1.0 - mse,
            r2_reported: 1.0 - mse,
            smape: 100.0 * mse,
        }
    }

    #[test]
    fn single_row_passes_through() {
        let r = row("A", "tsreprogram", 0, 0.25);
        let s = summarize(std::slice::from_ref(&r)).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].mse, s[0].mae, s[0].r2_raw, s[0].smape), (r.mse, r.mae, r.r2_raw, r.smape));
        assert_eq!(s[0].mse_flag, Flag::Best);
    }

    #[test]
    fn seeds_average_and_flags() {
        let rows = vec![
            row("A", "tsreprogram", 0, 0.1),
            row("A", "tsreprogram", 1, 0.2),
            row("A", "tsreprogram", 2, 0.6),
            row("A", "persistence", 0, 0.5),
            row("A", "dlinear", 0, 0.4),
        ];
        let s = summarize(&rows).unwrap();
        let ts = s.iter().find(|r| r.model == "tsreprogram").unwrap();
        assert!((ts.mse - 0.3).abs() < 1e-15);
        assert_eq!(ts.rows, 3);
        assert_eq!(ts.mse_flag, Flag::Best);
        assert_eq!(ts.r2_flag, Flag::Best);
        assert_eq!(s.iter().find(|r| r.model == "dlinear").unwrap().mse_flag, Flag::Second);
        assert_eq!(s.iter().find(|r| r.model == "persistence").unwrap().mse_flag, Flag::None);
    }

    #[test]
    fn empty_is_config_error() {
        assert!(matches!(summarize(&[]), Err(Error::Config(_))));
    }

    #[test]
    fn csv_round_trip_and_order() {
        let mut rows = vec![row("B", "tsreprogram", 1, 0.3), row("A", "tsreprogram", 0, 0.1)];
        rows[0].fraction = Some(0.05);
        sort_rows(&mut rows);
        assert_eq!(rows[0].plant, "A");
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("plant,horizon,protocol,model,source,fraction,seed,"));
        assert_eq!(read_report(buf.as_slice()).unwrap(), rows);
    }
}
