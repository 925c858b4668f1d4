use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::prompt_cache::PromptEncoder;
use super::Forecast;
use crate::backbone::{hash_arrays, Backbone, BackboneConfig, PrefixState};
use crate::checkpoint::Container;
use crate::error::{Error, Result};
use crate::numerics::{seeded_rng, Matrix, Tape, Var};
use crate::patcher::{partition, window_standardize, BoundEmbedder, PatchConfig, PatchEmbedder, WindowNormState};
use crate::projector::{BoundHead, ProjectionHead};
use crate::promptgen::{render_prompt, series_stats, PromptBundle, PromptTemplate, SYNTHETIC_CONTEXT};
use crate::reprogrammer::{AttentionConfig, BoundReprogrammer, PrototypeKeys, Reprogrammer};

fn default_context() -> String {
    SYNTHETIC_CONTEXT.to_string()
}

fn default_true() -> bool {
    true
}

/// Architecture of one forecaster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub input_len: usize,
    pub horizon: usize,
    #[serde(default)]
    pub patch: PatchConfig,
    #[serde(default)]
    pub attention: AttentionConfig,
    #[serde(default)]
    pub backbone: BackboneConfig,
    /// Per-window standardization before patching.
    #[serde(default)]
    pub standardize: bool,
    /// Prepend the statistics prompt; off gives patches only.
    #[serde(default = "default_true")]
    pub prompt: bool,
    #[serde(default = "default_context")]
    pub context: String,
    #[serde(default)]
    pub template: PromptTemplate,
}

impl ModelConfig {
    pub fn new(input_len: usize, horizon: usize) -> Self {
        ModelConfig {
            input_len,
            horizon,
            patch: PatchConfig::default(),
            attention: AttentionConfig::default(),
            backbone: BackboneConfig::default(),
            standardize: false,
            prompt: true,
            context: default_context(),
            template: PromptTemplate::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::config("horizon must be positive"));
        }
        self.patch.patch_count(self.input_len)?;
        self.attention.validate()?;
        self.backbone.validate()?;
        self.template.placeholders()?;
        Ok(())
    }

    pub fn patch_count(&self) -> Result<usize> {
        self.patch.patch_count(self.input_len)
    }

    /// Closed-form count of trainable scalars.
    pub fn trainable_count(&self) -> Result<usize> {
        let k = self.patch_count()?;
        let d_llm = self.backbone.d_llm;
        Ok(PatchEmbedder::param_count(&self.patch)
            + Reprogrammer::param_count(&self.attention, self.patch.d_model, self.backbone.vocab, d_llm)
            + ProjectionHead::param_count(self.horizon, k, d_llm))
    }
}

/// The trainable modules.
#[derive(Clone, Debug, PartialEq)]
pub struct Trainables {
    pub embedder: PatchEmbedder,
    pub reprogrammer: Reprogrammer,
    pub head: ProjectionHead,
}

pub(crate) struct BoundModel {
    pub embedder: BoundEmbedder,
    pub reprogrammer: BoundReprogrammer,
    pub head: BoundHead,
}

impl BoundModel {
    /// Parameter nodes in [`Trainables::names`] order.
    pub fn vars(&self) -> Vec<Var> {
        let r = &self.reprogrammer;
        let mut v = vec![self.embedder.weight, self.embedder.bias, r.mapping];
        v.extend(&r.wq);
        v.extend(&r.wk);
        v.extend(&r.wv);
        v.push(r.wo);
        v.push(self.head.weight);
        v.push(self.head.bias);
        v
    }
}

impl Trainables {
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let k = config.patch_count()?;
        let d_llm = config.backbone.d_llm;
        Ok(Trainables {
            embedder: PatchEmbedder::init(&config.patch, &mut seeded_rng(seed, 1)),
            reprogrammer: Reprogrammer::init(
                &config.attention,
                config.patch.d_model,
                config.backbone.vocab,
                d_llm,
                &mut seeded_rng(seed, 2),
            )?,
            head: ProjectionHead::init(config.horizon, k, d_llm, &mut seeded_rng(seed, 3)),
        })
    }

    /// Module name of each parameter, e.g. `attn.q.0`.
    pub fn names(&self) -> Vec<String> {
        let h = self.reprogrammer.heads();
        let mut n = vec!["patch.weight".to_string(), "patch.bias".into(), "mapping".into()];
        for kind in ["q", "k", "v"] {
            n.extend((0..h).map(|i| format!("attn.{kind}.{i}")));
        }
        n.extend(["attn.o".to_string(), "proj.weight".into(), "proj.bias".into()]);
        n
    }

    pub fn params(&self) -> Vec<&Matrix> {
        let r = &self.reprogrammer;
        let mut v = vec![&self.embedder.weight, &self.embedder.bias, &r.mapping];
        v.extend(&r.wq);
        v.extend(&r.wk);
        v.extend(&r.wv);
        v.push(&r.wo);
        v.push(&self.head.weight);
        v.push(&self.head.bias);
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Matrix> {
        let r = &mut self.reprogrammer;
        let mut v = vec![&mut self.embedder.weight, &mut self.embedder.bias, &mut r.mapping];
        v.extend(r.wq.iter_mut());
        v.extend(r.wk.iter_mut());
        v.extend(r.wv.iter_mut());
        v.push(&mut r.wo);
        v.push(&mut self.head.weight);
        v.push(&mut self.head.bias);
        v
    }

    pub fn named(&self) -> Vec<(String, &Matrix)> {
        self.names().into_iter().zip(self.params()).collect()
    }

    /// Copy with every parameter replaced, in [`Self::names`] order.
    pub fn with_values(&self, values: &[Matrix]) -> Result<Self> {
        let mut out = self.clone();
        let slots = out.params_mut();
        if slots.len() != values.len() {
            return Err(Error::shape(format!("expected {} parameter arrays, got {}", slots.len(), values.len())));
        }
        for (slot, v) in slots.into_iter().zip(values) {
            if slot.shape() != v.shape() {
                return Err(Error::shape("parameter shape mismatch"));
            }
            *slot = v.clone();
        }
        Ok(out)
    }

    pub fn count(&self) -> usize {
        self.params().iter().map(|m| m.len()).sum()
    }

    /// SHA-256 over all trainable arrays.
    pub fn hash(&self) -> String {
        hash_arrays(self.named().into_iter())
    }

    pub(crate) fn bind<'a>(&'a self, tape: &mut Tape<'a>, trainable: bool) -> BoundModel {
        BoundModel {
            embedder: self.embedder.bind(tape, trainable),
            reprogrammer: self.reprogrammer.bind(tape, trainable),
            head: self.head.bind(tape, trainable),
        }
    }
}

/// Everything about a window that does not depend on trainable parameters.
pub struct PreparedWindow {
    pub prefix: PrefixState,
    pub patches: Matrix,
    pub norm: WindowNormState,
    pub prompt: Option<PromptBundle>,
}

impl PreparedWindow {
    /// Target expressed in the space the model predicts in.
    pub fn model_target(&self, target: &[f64]) -> Matrix {
        Matrix::row_vector(&self.norm.apply(target))
    }
}

pub struct Forecaster {
    config: ModelConfig,
    backbone: Arc<Backbone>,
    prompts: Arc<PromptEncoder>,
    pub params: Trainables,
}

impl Forecaster {
    /// Fresh forecaster with its own seeded backbone.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let backbone = Arc::new(Backbone::new(config.backbone)?);
        let prompts = Arc::new(PromptEncoder::new(backbone));
        Self::with_encoder(config, prompts, seed)
    }

    /// Shares a backbone and its prompt-state cache with other forecasters.
    pub fn with_encoder(config: ModelConfig, prompts: Arc<PromptEncoder>, seed: u64) -> Result<Self> {
        config.validate()?;
        if *prompts.backbone().config() != config.backbone {
            return Err(Error::config("prompt encoder was built for a different backbone"));
        }
        let params = Trainables::init(&config, seed)?;
        Ok(Forecaster {
            backbone: prompts.backbone().clone(),
            config,
            prompts,
            params,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn backbone(&self) -> &Backbone {
        &self.backbone
    }

    pub fn prompt_encoder(&self) -> &Arc<PromptEncoder> {
        &self.prompts
    }

    pub fn patch_count(&self) -> usize {
        self.params.head.patch_count
    }

    /// Prompt text for an input window, or `None` when prompts are disabled.
    pub fn render_prompt(&self, input: &[f64]) -> Result<Option<PromptBundle>> {
        if !self.config.prompt {
            return Ok(None);
        }
        let stats = series_stats(input)?;
        render_prompt(
            &self.config.template,
            &self.config.context,
            Some(self.config.horizon),
            Some(self.config.input_len),
            &stats,
        )
        .map(Some)
    }

    pub fn prepare(&self, input: &[f64]) -> Result<PreparedWindow> {
        if input.len() != self.config.input_len {
            return Err(Error::shape(format!(
                "input window has {} points, model expects {}",
                input.len(),
                self.config.input_len
            )));
        }
        let prompt = self.render_prompt(input)?;
        let prefix = match &prompt {
            Some(p) => self.prompts.encode(p)?,
            None => PrefixState::empty(),
        };
        let (series, norm) = if self.config.standardize {
            window_standardize(input)?
        } else {
            (input.to_vec(), WindowNormState::IDENTITY)
        };
        let patches = partition(&series, &self.config.patch)?.patches;
        Ok(PreparedWindow {
            prefix,
            patches,
            norm,
            prompt,
        })
    }

    pub(crate) fn prototype_keys<'t>(&'t self, tape: &mut Tape<'t>, bound: &BoundModel) -> Result<PrototypeKeys> {
        let vocab = tape.constant(self.backbone.vocab_embeddings());
        bound.reprogrammer.prototype_keys(tape, vocab)
    }

    /// `1 × H` forecast in model space, recorded on `tape`.
    pub(crate) fn forward_prepared<'t>(
        &'t self,
        tape: &mut Tape<'t>,
        bound: &BoundModel,
        keys: &PrototypeKeys,
        window: &'t PreparedWindow,
    ) -> Result<Var> {
        let p = tape.constant(&window.patches);
        let e = bound.embedder.forward(tape, p)?;
        let (aligned, _) = bound.reprogrammer.forward(tape, e, keys)?;
        let o = self.backbone.forward_suffix(tape, &window.prefix, aligned)?;
        bound.head.forward(tape, o)
    }

    /// Forecast for one window with explicit parameters.
    pub fn forward_with(&self, params: &Trainables, input: &[f64]) -> Result<Vec<f64>> {
        let prepared = self.prepare(input)?;
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape, false);
        let keys = self.prototype_keys(&mut tape, &bound)?;
        let y = self.forward_prepared(&mut tape, &bound, &keys, &prepared)?;
        Ok(prepared.norm.invert(tape.value(y).data()))
    }

    /// Forecast of `H` capacity-normalized values for an `L`-point window.
    pub fn forward_window(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.forward_with(&self.params, input)
    }

    /// Mean model-space MSE over prepared windows, without gradients.
    pub fn batch_loss(&self, params: &Trainables, batch: &[(&PreparedWindow, &[f64])]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::config("empty batch"));
        }
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape, false);
        let keys = self.prototype_keys(&mut tape, &bound)?;
        let mut total = 0.0;
        for (w, y) in batch {
            let f = self.forward_prepared(&mut tape, &bound, &keys, w)?;
            let t = tape.constant_owned(w.model_target(y));
            let l = tape.mse(f, t)?;
            total += tape.value(l).get(0, 0);
        }
        Ok(total / batch.len() as f64)
    }

    /// Loss and parameter gradients for a batch of prepared windows.
    pub fn batch_gradient(
        &self,
        params: &Trainables,
        batch: &[(&PreparedWindow, &[f64])],
    ) -> Result<(f64, Vec<Matrix>)> {
        if batch.is_empty() {
            return Err(Error::config("empty batch"));
        }
        let targets: Vec<Matrix> = batch.iter().map(|(w, y)| w.model_target(y)).collect();
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape, true);
        let keys = self.prototype_keys(&mut tape, &bound)?;
        let mut losses = Vec::with_capacity(batch.len());
        for ((w, _), t) in batch.iter().zip(&targets) {
            let f = self.forward_prepared(&mut tape, &bound, &keys, w)?;
            let tv = tape.constant(t);
            losses.push(tape.mse(f, tv)?);
        }
        let mut sum = losses[0];
        for &l in &losses[1..] {
            sum = tape.add(sum, l)?;
        }
        let loss = tape.scale(sum, 1.0 / batch.len() as f64);
        let value = tape.value(loss).get(0, 0);
        let mut grads = tape.backward(loss)?;
        let vars = bound.vars();
        let out = vars
            .iter()
            .zip(params.params())
            .map(|(v, p)| grads.take(*v).unwrap_or_else(|| Matrix::zeros(p.rows(), p.cols())))
            .collect();
        Ok((value, out))
    }

    pub fn to_container(&self) -> Result<Container> {
        let meta = serde_json::to_string(&self.config).map_err(|e| Error::format(e.to_string()))?;
        let mut c = Container::new(meta);
        for (name, m) in self.params.named() {
            c.push(name, m.clone());
        }
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_container()?.save(path)
    }

    /// Restores a forecaster; the backbone is rebuilt from its seeded config.
    pub fn from_container(c: &Container) -> Result<Self> {
        let config: ModelConfig =
            serde_json::from_str(&c.meta).map_err(|e| Error::format(format!("checkpoint metadata: {e}")))?;
        let mut f = Forecaster::new(config, 0)?;
        let names = f.params.names();
        let values = names
            .iter()
            .zip(f.params.params())
            .map(|(n, p)| c.expect(n, p.shape()))
            .collect::<Result<Vec<_>>>()?;
        f.params = f.params.with_values(&values)?;
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_container(&Container::load(path)?)
    }
}

impl Forecast for Forecaster {
    fn label(&self) -> &'static str {
        "tsreprogram"
    }

    fn input_len(&self) -> usize {
        self.config.input_len
    }

    fn horizon(&self) -> usize {
        self.config.horizon
    }

    fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.forward_window(input)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> ModelConfig {
        let mut c = ModelConfig::new(48, 12);
        c.backbone.max_seq = 512;
        c
    }

    #[test]
    fn census_matches_closed_form() {
        for cfg in [toy(), ModelConfig::new(336, 24)] {
            let t = Trainables::init(&cfg, 0).unwrap();
            assert_eq!(t.count(), cfg.trainable_count().unwrap());
            assert_eq!(t.names().len(), t.params().len());
        }
    }

    #[test]
    fn forecast_shape_and_determinism() {
        let f = Forecaster::new(toy(), 1).unwrap();
        let x: Vec<f64> = (0..48).map(|i| (i as f64 / 7.0).sin().max(0.0)).collect();
        let a = f.forward_window(&x).unwrap();
        assert_eq!(a.len(), 12);
        assert_eq!(a, f.forward_window(&x).unwrap());
        assert!(f.forward_window(&x[..40]).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let f = Forecaster::new(toy(), 5).unwrap();
        let c = Container::from_bytes(&f.to_container().unwrap().to_bytes().unwrap()).unwrap();
        let g = Forecaster::from_container(&c).unwrap();
        assert_eq!(g.params.hash(), f.params.hash());
        let x = vec![0.25; 48];
        assert_eq!(g.forward_window(&x).unwrap(), f.forward_window(&x).unwrap());
    }
}
