//! Cross-attention from patch embeddings onto text prototypes.
//!
//! Prototypes `T = M·W_vocab` compress the frozen vocabulary table into `V'`
//! rows. Each head projects patch embeddings to queries and prototypes to
//! keys and values; the concatenated head outputs are mapped to `d_llm`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{uniform_matrix, Matrix, SeededRng, Tape, Var};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttentionConfig {
    pub heads: usize,
    pub d_head: usize,
    /// Number of prototypes `V'`.
    pub prototypes: usize,
    /// Reserved; must stay 0 (no dropout is implemented).
    pub dropout: f64,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        AttentionConfig {
            heads: 4,
            d_head: 8,
            prototypes: 32,
            dropout: 0.0,
        }
    }
}

impl AttentionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.prototypes == 0 {
            return Err(Error::config("prototype count V' must be positive"));
        }
        if self.heads == 0 || self.d_head == 0 {
            return Err(Error::config("attention needs at least one head of positive width"));
        }
        if self.dropout != 0.0 {
            return Err(Error::config("dropout is not supported; set it to 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reprogrammer {
    /// `V' × V`, applied to the frozen vocabulary table.
    pub mapping: Matrix,
    /// Per head, `d_h × d_model`.
    pub wq: Vec<Matrix>,
    /// Per head, `d_h × d_llm`.
    pub wk: Vec<Matrix>,
    /// Per head, `d_h × d_llm`.
    pub wv: Vec<Matrix>,
    /// `d_llm × H·d_h`.
    pub wo: Matrix,
}

pub struct BoundReprogrammer {
    pub mapping: Var,
    pub wq: Vec<Var>,
    pub wk: Vec<Var>,
    pub wv: Vec<Var>,
    pub wo: Var,
}

/// Per-head keys and values derived from the prototypes.
pub struct PrototypeKeys {
    pub prototypes: Var,
    pub heads: Vec<(Var, Var)>,
}

impl Reprogrammer {
    pub fn init(cfg: &AttentionConfig, d_model: usize, vocab: usize, d_llm: usize, rng: &mut SeededRng) -> Result<Self> {
        cfg.validate()?;
        let u = |rng: &mut SeededRng, r: usize, c: usize| uniform_matrix(rng, r, c, 1.0 / (c as f64).sqrt());
        let mapping = u(rng, cfg.prototypes, vocab);
        let wq = (0..cfg.heads).map(|_| u(rng, cfg.d_head, d_model)).collect();
        let wk = (0..cfg.heads).map(|_| u(rng, cfg.d_head, d_llm)).collect();
        let wv = (0..cfg.heads).map(|_| u(rng, cfg.d_head, d_llm)).collect();
        let wo = u(rng, d_llm, cfg.heads * cfg.d_head);
        Ok(Reprogrammer { mapping, wq, wk, wv, wo })
    }

    pub fn param_count(cfg: &AttentionConfig, d_model: usize, vocab: usize, d_llm: usize) -> usize {
        cfg.prototypes * vocab
            + cfg.heads * cfg.d_head * (d_model + 2 * d_llm)
            + d_llm * cfg.heads * cfg.d_head
    }

    pub fn heads(&self) -> usize {
        self.wq.len()
    }

    pub fn bind<'a>(&'a self, tape: &mut Tape<'a>, trainable: bool) -> BoundReprogrammer {
        let leaf = |t: &mut Tape<'a>, m: &'a Matrix| if trainable { t.param(m) } else { t.constant(m) };
        BoundReprogrammer {
            mapping: leaf(tape, &self.mapping),
            wq: self.wq.iter().map(|m| leaf(tape, m)).collect(),
            wk: self.wk.iter().map(|m| leaf(tape, m)).collect(),
            wv: self.wv.iter().map(|m| leaf(tape, m)).collect(),
            wo: leaf(tape, &self.wo),
        }
    }

    /// Reprogrammed patches `e'` for embeddings `e` (`k × d_model`).
    pub fn reprogram(&self, e: &Matrix, vocab: &Matrix) -> Result<Matrix> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, false);
        let w = tape.constant(vocab);
        let keys = bound.prototype_keys(&mut tape, w)?;
        let ev = tape.constant(e);
        let (out, _) = bound.forward(&mut tape, ev, &keys)?;
        Ok(tape.value(out).clone())
    }

    /// Attention distributions, one `k × V'` matrix per head.
    pub fn attention_weights(&self, e: &Matrix, vocab: &Matrix) -> Result<Vec<Matrix>> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, false);
        let w = tape.constant(vocab);
        let keys = bound.prototype_keys(&mut tape, w)?;
        let ev = tape.constant(e);
        let (_, alphas) = bound.forward(&mut tape, ev, &keys)?;
        Ok(alphas.into_iter().map(|a| tape.value(a).clone()).collect())
    }
}

/// `T = M·W_vocab`.
pub fn build_prototypes(vocab: &Matrix, mapping: &Matrix) -> Result<Matrix> {
    mapping.matmul(vocab)
}

impl BoundReprogrammer {
    /// Prototypes and their per-head keys/values. Independent of the patches,
    /// so one evaluation serves a whole batch.
    pub fn prototype_keys(&self, tape: &mut Tape<'_>, vocab: Var) -> Result<PrototypeKeys> {
        let t = tape.matmul(self.mapping, vocab)?;
        let mut heads = Vec::with_capacity(self.wk.len());
        for (&wk, &wv) in self.wk.iter().zip(&self.wv) {
            let k = tape.matmul_t(t, wk)?;
            let v = tape.matmul_t(t, wv)?;
            heads.push((k, v));
        }
        Ok(PrototypeKeys { prototypes: t, heads })
    }

    /// Returns `e'` and the per-head attention matrices.
    pub fn forward(&self, tape: &mut Tape<'_>, e: Var, keys: &PrototypeKeys) -> Result<(Var, Vec<Var>)> {
        let mut outs = Vec::with_capacity(self.wq.len());
        let mut alphas = Vec::with_capacity(self.wq.len());
        for (&wq, &(k, v)) in self.wq.iter().zip(&keys.heads) {
            let q = tape.matmul_t(e, wq)?;
            let d_h = tape.value(q).cols();
            let logits = tape.matmul_t(q, k)?;
            let logits = tape.scale(logits, 1.0 / (d_h as f64).sqrt());
            let alpha = tape.softmax_rows(logits, None)?;
            outs.push(tape.matmul(alpha, v)?);
            alphas.push(alpha);
        }
        let cat = tape.concat_cols(&outs)?;
        Ok((tape.matmul_t(cat, self.wo)?, alphas))
    }
}

/// Prompt rows followed by patch rows.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignedSequence {
    pub rows: Matrix,
    pub prompt_len: usize,
    pub patch_count: usize,
}

pub fn assemble_input(prompt: &Matrix, patches: &Matrix) -> Result<AlignedSequence> {
    if prompt.rows() > 0 && prompt.cols() != patches.cols() {
        return Err(Error::shape(format!(
            "prompt width {} does not match patch width {}",
            prompt.cols(),
            patches.cols()
        )));
    }
    let rows = if prompt.rows() == 0 {
        patches.clone()
    } else {
        Matrix::concat_rows(&[prompt, patches])?
    };
    Ok(AlignedSequence {
        rows,
        prompt_len: prompt.rows(),
        patch_count: patches.rows(),
    })
}

/// Rows of the vocabulary table selected by token id.
pub fn lookup_rows(vocab: &Matrix, ids: &[usize]) -> Result<Matrix> {
    let mut data = Vec::with_capacity(ids.len() * vocab.cols());
    for &id in ids {
        if id >= vocab.rows() {
            return Err(Error::shape(format!("token id {id} outside vocabulary of {}", vocab.rows())));
        }
        data.extend_from_slice(vocab.row(id));
    }
    Matrix::from_vec(ids.len(), vocab.cols(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{normal_matrix, seeded_rng};

    fn toy() -> (Reprogrammer, Matrix, Matrix) {
        let cfg = AttentionConfig { heads: 2, d_head: 4, prototypes: 4, dropout: 0.0 };
        let mut rng = seeded_rng(3, 0);
        let r = Reprogrammer::init(&cfg, 8, 10, 32, &mut rng).unwrap();
        let vocab = normal_matrix(&mut rng, 10, 32, 1.0);
        let e = normal_matrix(&mut rng, 2, 8, 1.0);
        (r, vocab, e)
    }

    #[test]
    fn rows_are_distributions() {
        let (r, vocab, e) = toy();
        for a in r.attention_weights(&e, &vocab).unwrap() {
            assert_eq!(a.shape(), (2, 4));
            for i in 0..a.rows() {
                assert!((a.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(r.reprogram(&e, &vocab).unwrap().shape(), (2, 32));
    }

    #[test]
    fn identity_and_zero_mapping() {
        let vocab = normal_matrix(&mut seeded_rng(1, 1), 5, 3, 1.0);
        assert_eq!(build_prototypes(&vocab, &Matrix::identity(5)).unwrap(), vocab);
        let zero = build_prototypes(&vocab, &Matrix::zeros(2, 5)).unwrap();
        assert!(zero.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn census() {
        let cfg = AttentionConfig::default();
        assert_eq!(cfg.prototypes * 256, 8192);
        let r = Reprogrammer::init(&cfg, 16, 256, 32, &mut seeded_rng(0, 0)).unwrap();
        let n = r.mapping.len()
            + r.wq.iter().chain(&r.wk).chain(&r.wv).map(Matrix::len).sum::<usize>()
            + r.wo.len();
        assert_eq!(n, Reprogrammer::param_count(&cfg, 16, 256, 32));
    }

    #[test]
    fn zero_prototypes_rejected() {
        let cfg = AttentionConfig { prototypes: 0, ..Default::default() };
        assert!(matches!(
            Reprogrammer::init(&cfg, 16, 256, 32, &mut seeded_rng(0, 0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn assemble() {
        let p = Matrix::filled(3, 2, 1.0);
        let e = Matrix::filled(2, 2, 2.0);
        let s = assemble_input(&p, &e).unwrap();
        assert_eq!((s.rows.rows(), s.prompt_len, s.patch_count), (5, 3, 2));
        assert_eq!(assemble_input(&Matrix::zeros(0, 2), &e).unwrap().rows, e);
        assert!(assemble_input(&Matrix::zeros(1, 3), &e).is_err());
    }
}
