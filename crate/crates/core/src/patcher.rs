//! Overlapping patches of an input window and their linear embedding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{uniform_matrix, Matrix, SeededRng, Tape, Var};

pub const STANDARDIZE_EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatchConfig {
    pub patch_len: usize,
    pub stride: usize,
    pub d_model: usize,
}

impl Default for PatchConfig {
    fn default() -> Self {
        PatchConfig {
            patch_len: 16,
            stride: 8,
            d_model: 16,
        }
    }
}

impl PatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 || self.stride > self.patch_len {
            return Err(Error::config(format!(
                "patch stride must be in [1, {}], got {}",
                self.patch_len, self.stride
            )));
        }
        if self.d_model == 0 {
            return Err(Error::config("d_model must be positive"));
        }
        Ok(())
    }

    /// `⌊(L − m)/s⌋ + 1`; trailing points past the last full patch are dropped.
    pub fn patch_count(&self, input_len: usize) -> Result<usize> {
        self.validate()?;
        if self.patch_len > input_len {
            return Err(Error::config(format!(
                "patch length {} exceeds input length {input_len}",
                self.patch_len
            )));
        }
        Ok((input_len - self.patch_len) / self.stride + 1)
    }
}

/// Patches as the rows of a `k × m` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchSet {
    pub patches: Matrix,
    pub input_len: usize,
}

impl PatchSet {
    pub fn count(&self) -> usize {
        self.patches.rows()
    }
}

/// Patch `i` (0-based) is `x[i·s .. i·s + m]`.
pub fn partition(x: &[f64], cfg: &PatchConfig) -> Result<PatchSet> {
    let k = cfg.patch_count(x.len())?;
    let m = cfg.patch_len;
    let mut data = Vec::with_capacity(k * m);
    for i in 0..k {
        data.extend_from_slice(&x[i * cfg.stride..i * cfg.stride + m]);
    }
    Ok(PatchSet {
        patches: Matrix::from_vec(k, m, data)?,
        input_len: x.len(),
    })
}

/// Linear patch embedding `e = S·W_eᵀ + b_e`.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchEmbedder {
    /// `d_model × m`.
    pub weight: Matrix,
    /// `1 × d_model`.
    pub bias: Matrix,
}

pub struct BoundEmbedder {
    pub weight: Var,
    pub bias: Var,
}

impl PatchEmbedder {
    pub fn init(cfg: &PatchConfig, rng: &mut SeededRng) -> Self {
        let bound = 1.0 / (cfg.patch_len as f64).sqrt();
        PatchEmbedder {
            weight: uniform_matrix(rng, cfg.d_model, cfg.patch_len, bound),
            bias: uniform_matrix(rng, 1, cfg.d_model, bound),
        }
    }

    pub fn param_count(cfg: &PatchConfig) -> usize {
        cfg.d_model * cfg.patch_len + cfg.d_model
    }

    pub fn bind<'a>(&'a self, tape: &mut Tape<'a>, trainable: bool) -> BoundEmbedder {
        let leaf = |t: &mut Tape<'a>, m: &'a Matrix| if trainable { t.param(m) } else { t.constant(m) };
        BoundEmbedder {
            weight: leaf(tape, &self.weight),
            bias: leaf(tape, &self.bias),
        }
    }

    pub fn embed(&self, patches: &PatchSet) -> Result<Matrix> {
        embed_patches(&patches.patches, &self.weight, &self.bias)
    }
}

impl BoundEmbedder {
    pub fn forward(&self, tape: &mut Tape<'_>, patches: Var) -> Result<Var> {
        let z = tape.matmul_t(patches, self.weight)?;
        tape.add_row(z, self.bias)
    }
}

/// `k × d_model` embeddings of the rows of `patches`.
pub fn embed_patches(patches: &Matrix, weight: &Matrix, bias: &Matrix) -> Result<Matrix> {
    if weight.cols() != patches.cols() || bias.shape() != (1, weight.rows()) {
        return Err(Error::shape(format!(
            "patch embedding: patches {}x{}, weight {}x{}, bias {}x{}",
            patches.rows(),
            patches.cols(),
            weight.rows(),
            weight.cols(),
            bias.rows(),
            bias.cols()
        )));
    }
    let mut tape = Tape::new();
    let b = BoundEmbedder {
        weight: tape.constant(weight),
        bias: tape.constant(bias),
    };
    let p = tape.constant(patches);
    let out = b.forward(&mut tape, p)?;
    Ok(tape.value(out).clone())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowNormState {
    pub mean: f64,
    pub std: f64,
}

impl WindowNormState {
    /// The identity transform, used when standardization is off.
    pub const IDENTITY: WindowNormState = WindowNormState { mean: 0.0, std: 1.0 };

    fn scale(&self) -> f64 {
        self.std.max(STANDARDIZE_EPS)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let s = self.scale();
        x.iter().map(|v| (v - self.mean) / s).collect()
    }

    pub fn invert(&self, x: &[f64]) -> Vec<f64> {
        let s = self.scale();
        x.iter().map(|v| v * s + self.mean).collect()
    }
}

/// `(x − mean)/max(std, ε)` with population standard deviation.
pub fn window_standardize(x: &[f64]) -> Result<(Vec<f64>, WindowNormState)> {
    if x.len() < 2 {
        return Err(Error::shape("window standardization needs at least 2 points"));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let state = WindowNormState { mean, std: var.sqrt() };
    Ok((state.apply(x), state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::seeded_rng;

    #[test]
    fn counts() {
        let cfg = PatchConfig::default();
        assert_eq!(cfg.patch_count(24).unwrap(), 2);
        assert_eq!(cfg.patch_count(48).unwrap(), 5);
        assert_eq!(cfg.patch_count(336).unwrap(), 41);
        assert!(matches!(cfg.patch_count(15), Err(Error::Config(_))));
    }

    #[test]
    fn slices() {
        let x: Vec<f64> = (1..=24).map(f64::from).collect();
        let p = partition(&x, &PatchConfig::default()).unwrap();
        assert_eq!(p.count(), 2);
        assert_eq!(p.patches.row(0), &x[0..16]);
        assert_eq!(p.patches.row(1), &x[8..24]);

        let cfg = PatchConfig { patch_len: 4, stride: 4, d_model: 2 };
        let p = partition(&x[..12], &cfg).unwrap();
        assert_eq!(p.patches.data(), &x[..12]);
    }

    #[test]
    fn embedding_linear_without_bias() {
        let cfg = PatchConfig { patch_len: 4, stride: 2, d_model: 3 };
        let mut e = PatchEmbedder::init(&cfg, &mut seeded_rng(1, 0));
        e.bias = Matrix::zeros(1, 3);
        let x: Vec<f64> = (0..8).map(|i| (i as f64).cos()).collect();
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let a = e.embed(&partition(&x, &cfg).unwrap()).unwrap();
        let b = e.embed(&partition(&x2, &cfg).unwrap()).unwrap();
        assert!(a.scale(2.0).max_abs_diff(&b) < 1e-15);
        let zero = e.embed(&partition(&[0.0; 8], &cfg).unwrap()).unwrap();
        assert!(zero.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn standardize_round_trip() {
        let (z, st) = window_standardize(&[0.5; 6]).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
        assert_eq!(st.invert(&z), vec![0.5; 6]);
        let x = [0.1, 0.7, 0.3, 0.0, 0.9];
        let (z, st) = window_standardize(&x).unwrap();
        for (a, b) in st.invert(&z).iter().zip(x) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
