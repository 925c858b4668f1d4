//! Frozen causal transformer standing in for the pre-trained language model.
//!
//! Pre-LN blocks (causal multi-head self-attention, GELU feed-forward),
//! sinusoidal positions added at the input and a final layer norm. Weights
//! are a pure function of [`BackboneConfig`] and are never registered as
//! trainable; gradients only flow *through* them.
//!
//! Because attention is causal, the rows of a prompt never see the patches
//! that follow it. [`Backbone::extend_prefix`] runs a row block once and
//! keeps its per-layer keys and values; [`Backbone::forward_suffix`] then
//! runs only the patch rows against that state. The result equals the full
//! [`Backbone::forward`] on the concatenated sequence.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checkpoint::Container;
use crate::error::{Error, Result};
use crate::numerics::{normal_matrix, seeded_rng, Matrix, Tape, Var};

const LN_EPS: f64 = 1e-5;
const INIT_STD: f64 = 0.02;
const RNG_STREAM: u64 = 0xBAC0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackboneConfig {
    pub layers: usize,
    pub heads: usize,
    pub d_llm: usize,
    pub d_ff: usize,
    pub vocab: usize,
    pub max_seq: usize,
    pub seed: u64,
    /// Amplitude of the sinusoidal position table.
    pub position_scale: f64,
}

impl Default for BackboneConfig {
    fn default() -> Self {
        BackboneConfig {
            layers: 2,
            heads: 4,
            d_llm: 32,
            d_ff: 64,
            vocab: 256,
            max_seq: 512,
            seed: 20_240_601,
            position_scale: INIT_STD,
        }
    }
}

impl BackboneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.heads == 0 || self.d_llm == 0 || self.d_ff == 0 {
            return Err(Error::config("backbone dimensions must be positive"));
        }
        if self.d_llm % self.heads != 0 {
            return Err(Error::config(format!(
                "d_llm {} is not divisible by {} heads",
                self.d_llm, self.heads
            )));
        }
        if self.vocab != crate::promptgen::VOCAB_SIZE {
            return Err(Error::config(format!(
                "backbone vocabulary must be {} to match the byte tokenizer",
                crate::promptgen::VOCAB_SIZE
            )));
        }
        if self.max_seq == 0 {
            return Err(Error::config("max_seq must be positive"));
        }
        Ok(())
    }

    pub fn d_head(&self) -> usize {
        self.d_llm / self.heads
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Layer {
    ln1_gamma: Matrix,
    ln1_beta: Matrix,
    wq: Matrix,
    wk: Matrix,
    wv: Matrix,
    wo: Matrix,
    ln2_gamma: Matrix,
    ln2_beta: Matrix,
    w1: Matrix,
    b1: Matrix,
    w2: Matrix,
    b2: Matrix,
}

#[derive(Clone, Debug)]
pub struct Backbone {
    config: BackboneConfig,
    vocab: Matrix,
    layers: Vec<Layer>,
    ln_f_gamma: Matrix,
    ln_f_beta: Matrix,
    positions: Matrix,
}

/// Keys and values of a processed row block, per layer and head, stored
/// transposed (`d_head × len`) so products against them run along the
/// sequence.
#[derive(Debug)]
pub struct Segment {
    len: usize,
    keys_t: Vec<Vec<Matrix>>,
    values_t: Vec<Vec<Matrix>>,
}

/// Attention state of every row seen so far. Cloning is cheap: segments are
/// shared.
#[derive(Clone, Debug, Default)]
pub struct PrefixState {
    segments: Vec<Arc<Segment>>,
}

impl PrefixState {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(|s| s.len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn sinusoid_table(rows: usize, d: usize, scale: f64) -> Matrix {
    let mut m = Matrix::zeros(rows, d);
    for pos in 0..rows {
        for i in 0..d {
            let pair = (i / 2) as f64;
            let angle = pos as f64 / 10_000f64.powf(2.0 * pair / d as f64);
            m.set(pos, i, scale * if i % 2 == 0 { angle.sin() } else { angle.cos() });
        }
    }
    m
}

impl Backbone {
    /// Seeded construction; identical configs give bitwise identical weights.
    pub fn new(config: BackboneConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded_rng(config.seed, RNG_STREAM);
        let d = config.d_llm;
        let vocab = normal_matrix(&mut rng, config.vocab, d, INIT_STD);
        let layers = (0..config.layers)
            .map(|_| Layer {
                ln1_gamma: Matrix::filled(1, d, 1.0),
                ln1_beta: Matrix::zeros(1, d),
                wq: normal_matrix(&mut rng, d, d, INIT_STD),
                wk: normal_matrix(&mut rng, d, d, INIT_STD),
                wv: normal_matrix(&mut rng, d, d, INIT_STD),
                wo: normal_matrix(&mut rng, d, d, INIT_STD),
                ln2_gamma: Matrix::filled(1, d, 1.0),
                ln2_beta: Matrix::zeros(1, d),
                w1: normal_matrix(&mut rng, config.d_ff, d, INIT_STD),
                b1: Matrix::zeros(1, config.d_ff),
                w2: normal_matrix(&mut rng, d, config.d_ff, INIT_STD),
                b2: Matrix::zeros(1, d),
            })
            .collect();
        Ok(Backbone {
            config,
            vocab,
            layers,
            ln_f_gamma: Matrix::filled(1, d, 1.0),
            ln_f_beta: Matrix::zeros(1, d),
            positions: sinusoid_table(config.max_seq, d, config.position_scale),
        })
    }

    pub fn config(&self) -> &BackboneConfig {
        &self.config
    }

    /// The frozen `vocab × d_llm` token embedding table.
    pub fn vocab_embeddings(&self) -> &Matrix {
        &self.vocab
    }

    /// Embedding rows for token ids.
    pub fn embed_tokens(&self, ids: &[usize]) -> Result<Matrix> {
        crate::reprogrammer::lookup_rows(&self.vocab, ids)
    }

    /// Every weight array under its container name, in a fixed order.
    pub fn named_arrays(&self) -> Vec<(String, &Matrix)> {
        let mut out = vec![("embed.vocab".to_string(), &self.vocab)];
        for (i, l) in self.layers.iter().enumerate() {
            let p = format!("layers.{i}");
            out.extend([
                (format!("{p}.ln1.gamma"), &l.ln1_gamma),
                (format!("{p}.ln1.beta"), &l.ln1_beta),
                (format!("{p}.attn.wq"), &l.wq),
                (format!("{p}.attn.wk"), &l.wk),
                (format!("{p}.attn.wv"), &l.wv),
                (format!("{p}.attn.wo"), &l.wo),
                (format!("{p}.ln2.gamma"), &l.ln2_gamma),
                (format!("{p}.ln2.beta"), &l.ln2_beta),
                (format!("{p}.ffn.w1"), &l.w1),
                (format!("{p}.ffn.b1"), &l.b1),
                (format!("{p}.ffn.w2"), &l.w2),
                (format!("{p}.ffn.b2"), &l.b2),
            ]);
        }
        out.push(("ln_f.gamma".to_string(), &self.ln_f_gamma));
        out.push(("ln_f.beta".to_string(), &self.ln_f_beta));
        out
    }

    /// SHA-256 over every array's name, shape and little-endian data.
    pub fn weights_hash(&self) -> String {
        hash_arrays(self.named_arrays().into_iter())
    }

    /// Output rows for the input rows `x` (`n × d_llm`), `n ≤ max_seq`.
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let prefix = PrefixState::empty();
        let mut tape = Tape::new();
        let xv = tape.constant(x);
        let (out, _) = self.run(&mut tape, &prefix, xv, false)?;
        Ok(tape.value(out).clone())
    }

    /// Appends rows to a prefix without recording gradients.
    pub fn extend_prefix(&self, prefix: &PrefixState, x: &Matrix) -> Result<PrefixState> {
        let mut tape = Tape::new();
        let xv = tape.constant(x);
        let (_, segment) = self.run(&mut tape, prefix, xv, true)?;
        let mut next = prefix.clone();
        next.segments.push(Arc::new(segment.expect("segment requested")));
        Ok(next)
    }

    /// Output rows for `x` placed after `prefix`, recorded on `tape`.
    pub fn forward_suffix<'t>(&'t self, tape: &mut Tape<'t>, prefix: &'t PrefixState, x: Var) -> Result<Var> {
        Ok(self.run(tape, prefix, x, false)?.0)
    }

    fn run<'t>(
        &'t self,
        tape: &mut Tape<'t>,
        prefix: &'t PrefixState,
        x: Var,
        keep_segment: bool,
    ) -> Result<(Var, Option<Segment>)> {
        let cfg = &self.config;
        let (n, width) = tape.value(x).shape();
        if width != cfg.d_llm {
            return Err(Error::shape(format!("backbone input width {width}, expected {}", cfg.d_llm)));
        }
        let offset = prefix.len();
        if offset + n > cfg.max_seq {
            return Err(Error::config(format!(
                "sequence of {} rows exceeds max_seq {}",
                offset + n,
                cfg.max_seq
            )));
        }
        let d_h = cfg.d_head();
        let inv_sqrt = 1.0 / (d_h as f64).sqrt();
        let pos = tape.constant_owned(self.positions.slice_rows(offset, n)?);
        let mut h = tape.add(x, pos)?;
        let mut segment = keep_segment.then(|| Segment {
            len: n,
            keys_t: Vec::with_capacity(cfg.layers),
            values_t: Vec::with_capacity(cfg.layers),
        });

        for (li, layer) in self.layers.iter().enumerate() {
            let g1 = tape.constant(&layer.ln1_gamma);
            let b1 = tape.constant(&layer.ln1_beta);
            let a = tape.layer_norm(h, g1, b1, LN_EPS)?;
            let wq = tape.constant(&layer.wq);
            let wk = tape.constant(&layer.wk);
            let wv = tape.constant(&layer.wv);
            let q = tape.matmul_t(a, wq)?;
            let k = tape.matmul_t(a, wk)?;
            let v = tape.matmul_t(a, wv)?;
            let mut heads = Vec::with_capacity(cfg.heads);
            let mut seg_k = Vec::new();
            let mut seg_v = Vec::new();
            for hi in 0..cfg.heads {
                let qh = tape.slice_cols(q, hi * d_h, d_h)?;
                let kh = tape.slice_cols(k, hi * d_h, d_h)?;
                let vh = tape.slice_cols(v, hi * d_h, d_h)?;
                if segment.is_some() {
                    seg_k.push(tape.value(kh).transpose());
                    seg_v.push(tape.value(vh).transpose());
                }
                // Scores against the prefix use constant keys, so the backward
                // pass never forms gradients for the prefix rows.
                let own = tape.matmul_t(qh, kh)?;
                let head = if offset == 0 {
                    let scores = tape.scale(own, inv_sqrt);
                    let alpha = tape.softmax_rows(scores, Some(0))?;
                    tape.matmul(alpha, vh)?
                } else {
                    let mut parts = Vec::with_capacity(prefix.segments.len() + 1);
                    for seg in &prefix.segments {
                        let kt = tape.constant(&seg.keys_t[li][hi]);
                        parts.push(tape.matmul(qh, kt)?);
                    }
                    parts.push(own);
                    let scores = tape.concat_cols(&parts)?;
                    let scores = tape.scale(scores, inv_sqrt);
                    let alpha = tape.softmax_rows(scores, Some(offset))?;
                    let mut start = 0;
                    let mut acc: Option<Var> = None;
                    for seg in &prefix.segments {
                        let a = tape.slice_cols(alpha, start, seg.len)?;
                        let vt = tape.constant(&seg.values_t[li][hi]);
                        let part = tape.matmul_t(a, vt)?;
                        acc = Some(match acc {
                            Some(prev) => tape.add(prev, part)?,
                            None => part,
                        });
                        start += seg.len;
                    }
                    let a_own = tape.slice_cols(alpha, offset, n)?;
                    let from_own = tape.matmul(a_own, vh)?;
                    tape.add(acc.expect("prefix is non-empty"), from_own)?
                };
                heads.push(head);
            }
            if let Some(s) = segment.as_mut() {
                s.keys_t.push(seg_k);
                s.values_t.push(seg_v);
            }
            let cat = tape.concat_cols(&heads)?;
            let wo = tape.constant(&layer.wo);
            let attn = tape.matmul_t(cat, wo)?;
            h = tape.add(h, attn)?;

            let g2 = tape.constant(&layer.ln2_gamma);
            let b2 = tape.constant(&layer.ln2_beta);
            let a = tape.layer_norm(h, g2, b2, LN_EPS)?;
            let w1 = tape.constant(&layer.w1);
            let fb1 = tape.constant(&layer.b1);
            let w2 = tape.constant(&layer.w2);
            let fb2 = tape.constant(&layer.b2);
            let f = tape.matmul_t(a, w1)?;
            let f = tape.add_row(f, fb1)?;
            let f = tape.gelu(f);
            let f = tape.matmul_t(f, w2)?;
            let f = tape.add_row(f, fb2)?;
            h = tape.add(h, f)?;
        }
        let gf = tape.constant(&self.ln_f_gamma);
        let bf = tape.constant(&self.ln_f_beta);
        let out = tape.layer_norm(h, gf, bf, LN_EPS)?;
        Ok((out, segment))
    }

    pub fn to_container(&self) -> Result<Container> {
        let meta = serde_json::to_string(&self.config).map_err(|e| Error::format(e.to_string()))?;
        let mut c = Container::new(meta);
        for (name, m) in self.named_arrays() {
            c.push(name, m.clone());
        }
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_container()?.save(path)
    }

    /// Builds a frozen backbone from a container, checking every array's
    /// presence and shape against the config in its metadata.
    pub fn from_container(c: &Container) -> Result<Self> {
        let config: BackboneConfig =
            serde_json::from_str(&c.meta).map_err(|e| Error::format(format!("backbone metadata: {e}")))?;
        config.validate().map_err(|e| Error::format(e.to_string()))?;
        let d = config.d_llm;
        let row = |name: &str, n: usize| c.expect(name, (1, n));
        let layers = (0..config.layers)
            .map(|i| {
                let p = format!("layers.{i}");
                Ok(Layer {
                    ln1_gamma: row(&format!("{p}.ln1.gamma"), d)?,
                    ln1_beta: row(&format!("{p}.ln1.beta"), d)?,
                    wq: c.expect(&format!("{p}.attn.wq"), (d, d))?,
                    wk: c.expect(&format!("{p}.attn.wk"), (d, d))?,
                    wv: c.expect(&format!("{p}.attn.wv"), (d, d))?,
                    wo: c.expect(&format!("{p}.attn.wo"), (d, d))?,
                    ln2_gamma: row(&format!("{p}.ln2.gamma"), d)?,
                    ln2_beta: row(&format!("{p}.ln2.beta"), d)?,
                    w1: c.expect(&format!("{p}.ffn.w1"), (config.d_ff, d))?,
                    b1: row(&format!("{p}.ffn.b1"), config.d_ff)?,
                    w2: c.expect(&format!("{p}.ffn.w2"), (d, config.d_ff))?,
                    b2: row(&format!("{p}.ffn.b2"), d)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Backbone {
            config,
            vocab: c.expect("embed.vocab", (config.vocab, d))?,
            layers,
            ln_f_gamma: row("ln_f.gamma", d)?,
            ln_f_beta: row("ln_f.beta", d)?,
            positions: sinusoid_table(config.max_seq, d, config.position_scale),
        })
    }

    pub fn load_external(path: &Path) -> Result<Self> {
        Self::from_container(&Container::load(path)?)
    }
}

/// SHA-256 of named arrays, as lowercase hex.
pub fn hash_arrays<'m, S: AsRef<str>>(arrays: impl Iterator<Item = (S, &'m Matrix)>) -> String {
    let mut h = Sha256::new();
    for (name, m) in arrays {
        h.update(name.as_ref().as_bytes());
        h.update((m.rows() as u64).to_le_bytes());
        h.update((m.cols() as u64).to_le_bytes());
        h.update(m.to_le_bytes());
    }
    hex::encode(h.finalize())
}
