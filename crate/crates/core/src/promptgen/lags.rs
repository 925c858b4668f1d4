use rustfft::num_complex::Complex64;

use super::spectrum::{dft, inverse_real};
use crate::error::{Error, Result};

pub const LAG_COUNT: usize = 5;

/// Autocorrelations are ranked after rounding to this fraction of the
/// zero-lag value, so that mathematically equal lags tie exactly and the
/// smaller lag wins regardless of floating-point noise.
pub const LAG_RESOLUTION: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LagRanking {
    /// Lags in `[1, Q−1]`, strongest first.
    pub lags: Vec<usize>,
    /// Set for zero-variance input; `lags` is then `1..=k`.
    pub degenerate: bool,
}

/// The `k` lags with the largest circular autocorrelation of the
/// mean-removed series, computed from the power spectrum.
pub fn top_lags(x: &[f64], k: usize) -> Result<LagRanking> {
    let q = x.len();
    if k == 0 || q < 2 * k {
        return Err(Error::shape(format!("top_lags needs at least {} points, got {q}", 2 * k)));
    }
    let first = x[0];
    if x.iter().all(|v| *v == first) {
        return Ok(LagRanking {
            lags: (1..=k).collect(),
            degenerate: true,
        });
    }
    let mean = x.iter().sum::<f64>() / q as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let power: Vec<Complex64> = dft(&centered)?
        .power()
        .into_iter()
        .map(|p| Complex64::new(p, 0.0))
        .collect();
    let acf = inverse_real(&power);
    Ok(LagRanking {
        lags: rank_lags(&acf, k),
        degenerate: false,
    })
}

/// Ranks lags `1..Q` of a circular autocorrelation sequence.
pub(crate) fn rank_lags(acf: &[f64], k: usize) -> Vec<usize> {
    let q = acf.len();
    let zero = acf[0];
    let score = |lag: usize| -> i64 {
        // r(l) = r(Q−l) exactly in theory; averaging makes it exact in practice.
        let sym = 0.5 * (acf[lag] + acf[q - lag]);
        (sym / zero / LAG_RESOLUTION).round() as i64
    };
    let mut lags: Vec<(i64, usize)> = (1..q).map(|l| (score(l), l)).collect();
    lags.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    lags.into_iter().take(k).map(|(_, l)| l).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn period_twelve_ranks_first() {
        let x: Vec<f64> = (0..96)
            .map(|q| (2.0 * std::f64::consts::PI * q as f64 / 12.0).sin())
            .collect();
        let r = top_lags(&x, 5).unwrap();
        assert_eq!(r.lags[0], 12);
        assert!(!r.degenerate);
    }

    #[test]
    fn constant_is_degenerate() {
        let r = top_lags(&[0.0; 24], 5).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.lags, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn too_short() {
        assert!(top_lags(&[1.0, 2.0, 3.0], 5).is_err());
    }
}
