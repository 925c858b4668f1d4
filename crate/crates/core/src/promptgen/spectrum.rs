use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Discrete Fourier coefficients `X(f) = Σ_q x_q e^{-j2πfq/Q}` for `f = 0..Q`,
/// with 0-based `q`.
///
/// A 1-based sum differs only by the unit-magnitude factor `e^{-j2πf/Q}` per
/// bin, so magnitudes are the same under either convention.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm()).collect()
    }

    pub fn power(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm_sqr()).collect()
    }
}

pub fn dft(x: &[f64]) -> Result<Spectrum> {
    if x.is_empty() {
        return Err(Error::shape("DFT of an empty series"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("DFT input contains non-finite values".into()));
    }
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::<f64>::new().plan_fft_forward(buf.len()).process(&mut buf);
    Ok(Spectrum { coeffs: buf })
}

/// Inverse transform, scaled by `1/Q`.
pub(crate) fn inverse_real(spectrum: &[Complex64]) -> Vec<f64> {
    let mut buf = spectrum.to_vec();
    let n = buf.len();
    FftPlanner::<f64>::new().plan_fft_inverse(n).process(&mut buf);
    buf.into_iter().map(|c| c.re / n as f64).collect()
}
