//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_series(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// O(Q²) DFT magnitudes, `|Σ_q x_q e^{-j2πfq/Q}|`.
pub fn naive_dft_magnitudes(x: &[f64]) -> Vec<f64> {
    let q = x.len();
    (0..q)
        .map(|f| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in x.iter().enumerate() {
                // Reduce f·t mod Q first so the angle stays small and exact.
                let angle = -2.0 * std::f64::consts::PI * ((f * t) % q) as f64 / q as f64;
                re += v * angle.cos();
                im += v * angle.sin();
            }
            re.hypot(im)
        })
        .collect()
}

/// Top-k lags from the circular autocorrelation computed by direct summation,
/// ranked with the library's quantisation (1e-9 of the zero-lag value) and
/// smaller-lag tie break.
pub fn brute_force_lags(x: &[f64], k: usize) -> Vec<usize> {
    let q = x.len();
    let mean = x.iter().sum::<f64>() / q as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let r: Vec<f64> = (0..q).map(|l| (0..q).map(|t| c[t] * c[(t + l) % q]).sum()).collect();
    let mut scored: Vec<(i64, usize)> = (1..q)
        .map(|l| {
            let sym = 0.5 * (r[l] + r[q - l]);
            ((sym / r[0] / 1e-9).round() as i64, l)
        })
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(k).map(|(_, l)| l).collect()
}

pub fn loop_mae(y: &[f64], p: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..y.len() {
        s += (y[i] - p[i]).abs();
    }
    s / y.len() as f64
}

pub fn loop_mse(y: &[f64], p: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..y.len() {
        s += (y[i] - p[i]) * (y[i] - p[i]);
    }
    s / y.len() as f64
}

pub fn loop_r2(y: &[f64], p: &[f64]) -> f64 {
    let mut mean = 0.0;
    for v in y {
        mean += v;
    }
    mean /= y.len() as f64;
    let (mut res, mut tot) = (0.0, 0.0);
    for i in 0..y.len() {
        res += (y[i] - p[i]) * (y[i] - p[i]);
        tot += (y[i] - mean) * (y[i] - mean);
    }
    1.0 - res / tot
}

pub fn loop_smape(y: &[f64], p: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..y.len() {
        let den = y[i].abs() + p[i].abs();
        if den > 0.0 {
            s += 2.0 * (p[i] - y[i]).abs() / den;
        }
    }
    100.0 * s / y.len() as f64
}

pub fn row_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `out[i] = Σ_j m[i][j]·v[j]` with `m` given as rows.
pub fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row_dot(row, v)).collect()
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}
