use serde::{Deserialize, Serialize};

use super::lags::{top_lags, LAG_COUNT};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Upward,
    Downward,
}

impl Trend {
    pub fn word(self) -> &'static str {
        match self {
            Trend::Upward => "upward",
            Trend::Downward => "downward",
        }
    }
}

/// Statistics substituted into the prompt.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptStats {
    pub min_val: f64,
    pub max_val: f64,
    pub median_val: f64,
    pub trend: Trend,
    pub top_lags: Vec<usize>,
    pub lags_degenerate: bool,
}

/// Min, max, lower-middle median, least-squares trend and top-5 lags.
pub fn series_stats(x: &[f64]) -> Result<PromptStats> {
    if x.len() < 2 {
        return Err(Error::shape("series_stats needs at least 2 points"));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median_val = sorted[(sorted.len() - 1) / 2];

    let n = x.len() as f64;
    let t_mean = (n - 1.0) / 2.0;
    let x_mean = x.iter().sum::<f64>() / n;
    let cov: f64 = x
        .iter()
        .enumerate()
        .map(|(t, v)| (t as f64 - t_mean) * (v - x_mean))
        .sum();
    let trend = if cov >= 0.0 { Trend::Upward } else { Trend::Downward };

    // Windows shorter than 2·5 report as many lags as they can support.
    let lag_count = LAG_COUNT.min(x.len() / 2);
    let ranking = top_lags(x, lag_count)?;

    Ok(PromptStats {
        min_val: sorted[0],
        max_val: *sorted.last().expect("non-empty"),
        median_val,
        trend,
        top_lags: ranking.lags,
        lags_degenerate: ranking.degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_points() {
        let s = series_stats(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.min_val, s.max_val, s.median_val), (1.0, 3.0, 2.0));
        assert_eq!(s.trend, Trend::Upward);
        assert_eq!(s.top_lags.len(), 1);
        assert_eq!(series_stats(&[3.0, 2.0, 1.0]).unwrap().trend, Trend::Downward);
        assert!(series_stats(&[1.0]).is_err());
    }

    #[test]
    fn increasing() {
        let s = series_stats(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]).unwrap();
        assert_eq!((s.min_val, s.max_val, s.median_val), (1.0, 10.0, 5.0));
        assert_eq!(s.trend, Trend::Upward);
        let s = series_stats(&[3.0, 2.0, 1.0, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0, -1.0]).unwrap();
        assert_eq!(s.trend, Trend::Downward);
    }

    #[test]
    fn lower_middle_median() {
        let s = series_stats(&[0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(s.median_val, 0.0);
    }

    #[test]
    fn flat_is_upward() {
        let s = series_stats(&[0.0; 12]).unwrap();
        assert_eq!(s.trend, Trend::Upward);
        assert!(s.lags_degenerate);
    }
}
