mod common;

use chrono::NaiveDate;
use proptest::prelude::*;
use rand::Rng;
use tsreprogram::dataio::{
    chronological_split, default_fixture, limit_fraction, preprocess, read_series, write_power_csv, AuditedSplits,
    NaturalCubicSpline, PlantManifest, SplitKind, TimeSeries,
};

fn start() -> chrono::NaiveDateTime {
    NaiveDate::from_ymd_opt(2006, 6, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
}

/// Natural cubic spline by assembling the full (n × n) system for the second
/// derivatives and solving it with Gaussian elimination.
fn dense_spline(xs: &[f64], ys: &[f64], at: f64) -> f64 {
    let n = xs.len();
    let mut a = vec![vec![0.0; n + 1]; n];
    a[0][0] = 1.0;
    a[n - 1][n - 1] = 1.0;
    for i in 1..n - 1 {
        let (h0, h1) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
        a[i][i - 1] = h0;
        a[i][i] = 2.0 * (h0 + h1);
        a[i][i + 1] = h1;
        a[i][n] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs())).unwrap();
        a.swap(col, pivot);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=n {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let m: Vec<f64> = (0..n).map(|i| a[i][n] / a[i][i]).collect();
    let i = (0..n - 1).find(|&i| at <= xs[i + 1]).unwrap_or(n - 2);
    let h = xs[i + 1] - xs[i];
    let (t0, t1) = (xs[i + 1] - at, at - xs[i]);
    m[i] * t0.powi(3) / (6.0 * h)
        + m[i + 1] * t1.powi(3) / (6.0 * h)
        + (ys[i] / h - m[i] * h / 6.0) * t0
        + (ys[i + 1] / h - m[i + 1] * h / 6.0) * t1
}

#[test]
fn spline_matches_dense_solve() {
    let mut rng = common::rng(5);
    for _ in 0..20 {
        let n = rng.random_range(4..30);
        let mut xs = vec![0.0];
        for _ in 1..n {
            let last = *xs.last().unwrap();
            xs.push(last + rng.random_range(0.5..3.0));
        }
        let ys = common::uniform_series(&mut rng, n);
        let spline = NaturalCubicSpline::fit(&xs, &ys).unwrap();
        for k in 0..=100 {
            let at = xs[0] + (xs[n - 1] - xs[0]) * k as f64 / 100.0;
            assert!((spline.eval(at) - dense_spline(&xs, &ys, at)).abs() < 1e-9);
        }
        for (x, y) in xs.iter().zip(&ys) {
            assert!((spline.eval(*x) - y).abs() < 1e-12);
        }
    }
}

#[test]
fn split_reference_sizes() {
    assert_eq!(chronological_split(105, 0.7, 0.2, 0.1).unwrap().lengths(), (73, 21, 11));
    assert_eq!(chronological_split(17280, 0.7, 0.2, 0.1).unwrap().lengths(), (12096, 3456, 1728));
}

#[test]
fn windows_never_cross_split_boundaries() {
    let (_, series) = default_fixture(60, 0).unwrap().remove(0);
    let splits = AuditedSplits::new(series).unwrap();
    let r = splits.ranges().clone();
    for (l, h) in [(24, 12), (48, 24), (336, 192), (336, 336)] {
        let test = splits.windows(SplitKind::Test, l, h, 1).unwrap();
        let span = test.span().unwrap();
        assert!(span.start >= r.val.end, "test windows reach into validation");
        for kind in [SplitKind::Train, SplitKind::Val] {
            let w = splits.windows(kind, l, h, 1).unwrap();
            let s = w.span().unwrap();
            assert!(s.end <= span.start);
            let own = if kind == SplitKind::Train { &r.train } else { &r.val };
            assert!(s.start >= own.start && s.end <= own.end);
        }
    }
}

#[test]
fn few_shot_counts_follow_ceiling_rule() {
    let (_, series) = default_fixture(60, 0).unwrap().remove(1);
    let splits = AuditedSplits::new(series).unwrap();
    let full = splits.windows(SplitKind::Train, 336, 192, 1).unwrap();
    let n = full.len();
    for p in [0.05, 0.10, 0.20, 0.50] {
        let part = limit_fraction(&full, p).unwrap();
        assert_eq!(part.len() as f64, (p * n as f64).ceil());
        assert_eq!(part.origins(), &full.origins()[..part.len()]);
    }
}

#[test]
fn audit_log_records_reads() {
    let (_, series) = default_fixture(10, 0).unwrap().remove(2);
    let splits = AuditedSplits::new(series).unwrap();
    splits.windows(SplitKind::Test, 24, 12, 1).unwrap();
    assert_eq!(splits.accesses(), vec![SplitKind::Test]);
    splits.windows(SplitKind::Val, 24, 12, 1).unwrap();
    assert_eq!(splits.accesses(), vec![SplitKind::Test, SplitKind::Val]);
}

#[test]
fn csv_round_trip_with_gaps_and_abnormal_values() {
    let manifest = PlantManifest::new("A", 10.0, 117.0, 32.7);
    let mut values: Vec<f64> = (0..288).map(|i| 5.0 * ((i as f64 - 144.0) / 40.0).cos().max(0.0)).collect();
    values[140] = f64::NAN;
    values[141] = f64::NAN;
    values[150] = 99.0;
    let raw = TimeSeries::new("A", start(), values);
    let mut buf = Vec::new();
    write_power_csv(&mut buf, &raw).unwrap();
    let back = read_series(buf.as_slice(), &manifest).unwrap();
    assert_eq!(back.gap_count(), 2);
    let clean = preprocess(back, &manifest).unwrap();
    assert!(!clean.has_gaps());
    assert!(clean.values.iter().all(|v| (0.0..=1.0).contains(v)));
    assert!(clean.values[150] < 0.55, "abnormal reading should be interpolated");
}

proptest! {
    #[test]
    fn split_is_exact_partition(n in 0usize..100_000) {
        let s = chronological_split(n, 0.7, 0.2, 0.1).unwrap();
        let (a, b, c) = s.lengths();
        prop_assert_eq!(a + b + c, n);
        prop_assert_eq!(a, (0.7 * n as f64 + 1e-9).floor() as usize);
        prop_assert_eq!(b, (0.2 * n as f64 + 1e-9).floor() as usize);
    }
}
