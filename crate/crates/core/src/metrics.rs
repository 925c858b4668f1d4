//! Point-forecast error metrics over flattened (truth, forecast) pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mae: f64,
    pub mse: f64,
    pub r2_raw: f64,
    /// `max(0, r2_raw)`.
    pub r2_reported: f64,
    pub smape: f64,
    pub n: usize,
}

fn check(y: &[f64], y_hat: &[f64]) -> Result<()> {
    if y.len() != y_hat.len() {
        return Err(Error::shape(format!("metric inputs differ in length: {} vs {}", y.len(), y_hat.len())));
    }
    if y.is_empty() {
        return Err(Error::shape("metric inputs are empty"));
    }
    Ok(())
}

pub fn mae(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check(y, y_hat)?;
    Ok(y.iter().zip(y_hat).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}

pub fn mse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check(y, y_hat)?;
    Ok(y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

/// `(raw, reported)` coefficient of determination. Constant truth has no
/// variance to explain and is rejected.
pub fn r2(y: &[f64], y_hat: &[f64]) -> Result<(f64, f64)> {
    check(y, y_hat)?;
    if y.len() < 2 {
        return Err(Error::shape("R² needs at least 2 points"));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Degenerate("R² undefined for constant ground truth".into()));
    }
    let ss_res: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    let raw = 1.0 - ss_res / ss_tot;
    Ok((raw, raw.max(0.0)))
}

/// Symmetric percentage error in `[0, 200]`. A pair where both values are
/// zero contributes nothing.
pub fn smape(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check(y, y_hat)?;
    let total: f64 = y
        .iter()
        .zip(y_hat)
        .map(|(a, b)| {
            let denom = a.abs() + b.abs();
            if denom == 0.0 {
                0.0
            } else {
                (a - b).abs() / denom
            }
        })
        .sum();
    Ok(200.0 * total / y.len() as f64)
}

pub fn evaluate_pairs(y: &[f64], y_hat: &[f64]) -> Result<MetricsReport> {
    let (r2_raw, r2_reported) = r2(y, y_hat)?;
    Ok(MetricsReport {
        mae: mae(y, y_hat)?,
        mse: mse(y, y_hat)?,
        r2_raw,
        r2_reported,
        smape: smape(y, y_hat)?,
        n: y.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        assert_eq!(mae(&[0.0, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!((mse(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r2(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap(), (0.5, 0.5));
        assert_eq!(r2(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap().0, 0.0);
        assert_eq!(smape(&[1.0], &[3.0]).unwrap(), 100.0);
        assert_eq!(smape(&[0.0], &[0.0]).unwrap(), 0.0);
        assert_eq!(smape(&[0.0], &[1e-9]).unwrap(), 200.0);
    }

    #[test]
    fn negative_r2_clamped_in_report() {
        let (raw, rep) = r2(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert!(raw < 0.0);
        assert_eq!(rep, 0.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(mae(&[1.0], &[1.0, 2.0]), Err(Error::Shape(_))));
        assert!(matches!(mse(&[], &[]), Err(Error::Shape(_))));
        assert!(matches!(r2(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::Degenerate(_))));
    }
}
