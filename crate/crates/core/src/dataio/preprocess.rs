use super::manifest::PlantManifest;
use super::series::TimeSeries;
use super::spline::NaturalCubicSpline;
use crate::error::{Error, Result};

/// Raw values above `ABNORMAL_FACTOR × capacity`, or below zero, are treated
/// as missing before interpolation.
pub const ABNORMAL_FACTOR: f64 = 1.05;

/// Flags physically implausible raw (MW) readings as gaps.
pub fn mark_abnormal(mut series: TimeSeries, capacity: f64) -> TimeSeries {
    let limit = ABNORMAL_FACTOR * capacity;
    for (v, miss) in series.values.iter_mut().zip(series.missing.iter_mut()) {
        if !*miss && (*v < 0.0 || *v > limit) {
            *v = f64::NAN;
            *miss = true;
        }
    }
    series
}

pub fn normalize_capacity(mut series: TimeSeries, capacity: f64) -> Result<TimeSeries> {
    if !(capacity > 0.0) || !capacity.is_finite() {
        return Err(Error::config(format!("capacity must be > 0, got {capacity}")));
    }
    for v in &mut series.values {
        *v /= capacity;
    }
    series.normalized_by = Some(capacity);
    Ok(series)
}

/// Fills gaps: interior gaps from a natural cubic spline through every known
/// point, boundary gaps with the nearest known value. Results are clipped to
/// be non-negative.
pub fn fill_missing_cubic(mut series: TimeSeries) -> Result<TimeSeries> {
    if !series.has_gaps() {
        return Ok(series);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = series
        .values
        .iter()
        .zip(&series.missing)
        .enumerate()
        .filter(|(_, (_, m))| !**m)
        .map(|(i, (v, _))| (i as f64, *v))
        .unzip();
    if xs.len() < 4 {
        return Err(Error::data(format!(
            "plant {}: {} known points, need at least 4 to interpolate",
            series.plant_id,
            xs.len()
        )));
    }
    let spline = NaturalCubicSpline::fit(&xs, &ys)?;
    let first = xs[0] as usize;
    let last = *xs.last().expect("non-empty") as usize;
    for i in 0..series.len() {
        if !series.missing[i] {
            continue;
        }
        let v = if i < first {
            ys[0]
        } else if i > last {
            *ys.last().expect("non-empty")
        } else {
            spline.eval(i as f64)
        };
        series.values[i] = v.max(0.0);
        series.missing[i] = false;
    }
    Ok(series)
}

/// Full cleaning chain for a raw MW series: abnormal values become gaps,
/// values are divided by capacity, gaps are filled, and the result is clipped
/// to `[0, 1]`.
pub fn preprocess(raw: TimeSeries, manifest: &PlantManifest) -> Result<TimeSeries> {
    manifest.validate()?;
    let s = mark_abnormal(raw, manifest.capacity_mw);
    let s = normalize_capacity(s, manifest.capacity_mw)?;
    let mut s = fill_missing_cubic(s)?;
    for v in &mut s.values {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn start() -> chrono::NaiveDateTime {
        NaiveDate::from_ymd_opt(2006, 6, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let s = TimeSeries::new("A", start(), vec![6.5, 13.0]);
        let n = normalize_capacity(s, 13.0).unwrap();
        assert_eq!(n.values, vec![0.5, 1.0]);
        assert_eq!(n.normalized_by, Some(13.0));
        let s = TimeSeries::new("A", start(), vec![8.0; 3]);
        assert_eq!(normalize_capacity(s, 8.0).unwrap().values, vec![1.0; 3]);
        let s = TimeSeries::new("A", start(), vec![1.0]);
        assert!(matches!(normalize_capacity(s, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn no_gaps_unchanged() {
        let s = TimeSeries::new("A", start(), vec![0.1, 0.2, 0.3, 0.4, 0.5]);
        assert_eq!(fill_missing_cubic(s.clone()).unwrap(), s);
    }

    #[test]
    fn collinear_gap_is_exact() {
        let mut vals: Vec<f64> = (0..10).map(|i| 0.1 + 0.05 * i as f64).collect();
        vals[4] = f64::NAN;
        let filled = fill_missing_cubic(TimeSeries::new("A", start(), vals)).unwrap();
        assert!((filled.values[4] - 0.3).abs() < 1e-12);
        assert!(!filled.has_gaps());
    }

    #[test]
    fn boundary_gaps_use_nearest() {
        let vals = vec![f64::NAN, f64::NAN, 0.2, 0.4, 0.3, 0.5, f64::NAN];
        let filled = fill_missing_cubic(TimeSeries::new("A", start(), vals)).unwrap();
        assert_eq!(filled.values[0], 0.2);
        assert_eq!(filled.values[1], 0.2);
        assert_eq!(filled.values[6], 0.5);
    }

    #[test]
    fn too_few_known_points() {
        let vals = vec![0.1, f64::NAN, 0.2, 0.3, f64::NAN];
        assert!(matches!(
            fill_missing_cubic(TimeSeries::new("A", start(), vals)),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn abnormal_values_become_gaps_then_filled() {
        let raw = TimeSeries::new("A", start(), vec![0.0, 1.0, -3.0, 3.0, 40.0, 5.0, 6.0]);
        let m = PlantManifest::new("A", 13.0, 117.25, 32.65);
        let marked = mark_abnormal(raw.clone(), 13.0);
        assert_eq!(marked.gaps(), vec![2, 4]);
        let clean = preprocess(raw, &m).unwrap();
        assert!(!clean.has_gaps());
        assert!(clean.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
