use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::backbone::BackboneConfig;
use crate::baselines::DEFAULT_KERNEL;
use crate::error::{Error, Result};
use crate::patcher::PatchConfig;
use crate::promptgen::{PromptTemplate, SYNTHETIC_CONTEXT};
use crate::reprogrammer::AttentionConfig;
use crate::trainer::{ModelConfig, TrainConfig};

/// Input length of every protocol except the short-term one.
pub const LONG_INPUT_LEN: usize = 336;
pub const DEFAULT_FRACTIONS: [f64; 4] = [0.05, 0.10, 0.20, 0.50];
pub const DEFAULT_SEEDS: [u64; 3] = [0, 1, 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Short,
    Long,
    Fewshot,
    Zeroshot,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Short => "short",
            Protocol::Long => "long",
            Protocol::Fewshot => "fewshot",
            Protocol::Zeroshot => "zeroshot",
        }
    }

    /// Short-term runs look back twice the horizon; all others use 336 steps.
    pub fn input_len(self, horizon: usize) -> usize {
        match self {
            Protocol::Short => 2 * horizon,
            _ => LONG_INPUT_LEN,
        }
    }

    pub fn default_horizons(self) -> Vec<usize> {
        match self {
            Protocol::Short => vec![12, 24],
            _ => vec![192, 336],
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "short" => Ok(Protocol::Short),
            "long" => Ok(Protocol::Long),
            "fewshot" => Ok(Protocol::Fewshot),
            "zeroshot" => Ok(Protocol::Zeroshot),
            other => Err(Error::config(format!(
                "unknown protocol `{other}` (expected short, long, fewshot or zeroshot)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Tsreprogram,
    Persistence,
    Dlinear,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Tsreprogram => "tsreprogram",
            ModelKind::Persistence => "persistence",
            ModelKind::Dlinear => "dlinear",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsreprogram" => Ok(ModelKind::Tsreprogram),
            "persistence" => Ok(ModelKind::Persistence),
            "dlinear" => Ok(ModelKind::Dlinear),
            other => Err(Error::config(format!(
                "unknown model `{other}` (expected tsreprogram, persistence or dlinear)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Synthetic,
    Dir,
}

/// Where plant series come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub source: SourceKind,
    /// Synthetic fixture length.
    pub days: usize,
    /// Base seed of the synthetic fixture.
    pub seed: u64,
    /// Directory with `plants.toml` and one power CSV per plant.
    pub dir: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            source: SourceKind::Synthetic,
            days: 60,
            seed: 0,
            dir: None,
        }
    }
}

/// Window strides per split. 1 uses every window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    pub train_stride: usize,
    pub val_stride: usize,
    pub test_stride: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            train_stride: 1,
            val_stride: 1,
            test_stride: 1,
        }
    }
}

/// Architecture settings shared by every case; lengths come from the protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSettings {
    pub patch: PatchConfig,
    pub attention: AttentionConfig,
    pub backbone: BackboneConfig,
    pub standardize: bool,
    pub prompt: bool,
    pub context: String,
    pub template: PromptTemplate,
    pub dlinear_kernel: usize,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            patch: PatchConfig::default(),
            attention: AttentionConfig::default(),
            backbone: BackboneConfig::default(),
            standardize: false,
            prompt: true,
            context: SYNTHETIC_CONTEXT.to_string(),
            template: PromptTemplate::default(),
            dlinear_kernel: DEFAULT_KERNEL,
        }
    }
}

impl ModelSettings {
    pub fn model_config(&self, input_len: usize, horizon: usize) -> ModelConfig {
        ModelConfig {
            input_len,
            horizon,
            patch: self.patch,
            attention: self.attention,
            backbone: self.backbone,
            standardize: self.standardize,
            prompt: self.prompt,
            context: self.context.clone(),
            template: self.template.clone(),
        }
    }
}

/// One experiment: a protocol applied to plants, horizons and seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    /// Empty means every plant in the data source.
    pub plants: Vec<String>,
    /// Empty means the protocol's default horizons.
    pub horizons: Vec<usize>,
    /// Overrides the protocol's input length (with a warning).
    pub input_len: Option<usize>,
    /// Few-shot training fractions.
    pub fractions: Vec<f64>,
    /// Zero-shot `[source, target]` pairs; empty means all ordered pairs.
    pub pairs: Vec<[String; 2]>,
    pub seeds: Vec<u64>,
    pub models: Vec<ModelKind>,
    pub data: DataConfig,
    pub windows: WindowConfig,
    pub train: TrainConfig,
    pub model: ModelSettings,
    /// Write per-case forecast traces.
    pub traces: bool,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            protocol: Protocol::Short,
            plants: Vec::new(),
            horizons: Vec::new(),
            input_len: None,
            fractions: DEFAULT_FRACTIONS.to_vec(),
            pairs: Vec::new(),
            seeds: DEFAULT_SEEDS.to_vec(),
            models: vec![ModelKind::Tsreprogram],
            data: DataConfig::default(),
            windows: WindowConfig::default(),
            train: TrainConfig::default(),
            model: ModelSettings::default(),
            traces: true,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(format!("experiment config: {e}")))?;
        Ok(cfg)
    }

    /// Reads a TOML file. A relative `data.dir` is resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let (Some(dir), Some(base)) = (&cfg.data.dir, path.parent()) {
            if dir.is_relative() {
                cfg.data.dir = Some(base.join(dir));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("experiment config: {e}")))
    }

    pub fn horizons(&self) -> Vec<usize> {
        if self.horizons.is_empty() {
            self.protocol.default_horizons()
        } else {
            self.horizons.clone()
        }
    }

    pub fn input_len(&self, horizon: usize) -> usize {
        self.input_len.unwrap_or_else(|| self.protocol.input_len(horizon))
    }

    /// Checks everything that can be checked without data, and logs
    /// warnings for accepted but non-default choices.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        if self.models.is_empty() {
            return Err(Error::config("at least one model is required"));
        }
        let horizons = self.horizons();
        if horizons.contains(&0) {
            return Err(Error::config("horizons must be positive"));
        }
        let w = &self.windows;
        if w.train_stride == 0 || w.val_stride == 0 || w.test_stride == 0 {
            return Err(Error::config("window strides must be positive"));
        }
        if let Some(l) = self.input_len {
            for &h in &horizons {
                let rule = self.protocol.input_len(h);
                if l != rule {
                    log::warn!(
                        "input length {l} overrides the {} protocol's {rule} for horizon {h}",
                        self.protocol
                    );
                }
            }
        }
        if self.protocol == Protocol::Fewshot {
            if self.fractions.is_empty() {
                return Err(Error::config("few-shot protocol needs at least one fraction"));
            }
            for &p in &self.fractions {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::config(format!("fraction {p} outside (0, 1]")));
                }
                if !DEFAULT_FRACTIONS.contains(&p) {
                    log::warn!("fraction {p} is not one of the default few-shot fractions {DEFAULT_FRACTIONS:?}");
                }
            }
        }
        for [s, t] in &self.pairs {
            if s == t {
                return Err(Error::config(format!("zero-shot pair {s}->{t} must use distinct plants")));
            }
        }
        if self.data.source == SourceKind::Dir && self.data.dir.is_none() {
            return Err(Error::config("data.source = \"dir\" needs data.dir"));
        }
        self.train.validate()?;
        for &h in &horizons {
            self.model.model_config(self.input_len(h), h).validate()?;
        }
        Ok(())
    }

    /// Zero-shot pairs over the given plants: the configured ones, or every
    /// ordered pair of distinct plants.
    pub fn zeroshot_pairs(&self, plants: &[String]) -> Vec<(String, String)> {
        if !self.pairs.is_empty() {
            return self.pairs.iter().map(|[s, t]| (s.clone(), t.clone())).collect();
        }
        let mut out = Vec::new();
        for s in plants {
            for t in plants {
                if s != t {
                    out.push((s.clone(), t.clone()));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_length_rule() {
        assert_eq!(Protocol::Short.input_len(12), 24);
        assert_eq!(Protocol::Short.input_len(24), 48);
        for p in [Protocol::Long, Protocol::Fewshot, Protocol::Zeroshot] {
            assert_eq!(p.input_len(192), 336);
            assert_eq!(p.input_len(96), 336);
        }
    }

    #[test]
    fn parses_minimal_toml() {
        let cfg = ExperimentConfig::from_toml_str("protocol = \"short\"\nhorizons = [12]\n").unwrap();
        assert_eq!(cfg.horizons(), vec![12]);
        assert_eq!(cfg.seeds, vec![0, 1, 2]);
        assert_eq!(cfg.input_len(12), 24);
        cfg.validate().unwrap();
        let long = ExperimentConfig::from_toml_str("protocol = \"long\"").unwrap();
        assert_eq!(long.horizons(), vec![192, 336]);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ExperimentConfig::from_toml_str("protocol = \"weekly\"").is_err());
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
        let cfg = ExperimentConfig::from_toml_str("protocol = \"fewshot\"\nfractions = [0.0]").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::from_toml_str("protocol = \"zeroshot\"\npairs = [[\"A\", \"A\"]]").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn off_default_fraction_is_accepted() {
        let cfg = ExperimentConfig::from_toml_str("protocol = \"fewshot\"\nfractions = [0.3]").unwrap();
        cfg.validate().unwrap();
    }

    #[test]
    fn all_ordered_pairs() {
        let cfg = ExperimentConfig {
            protocol: Protocol::Zeroshot,
            ..Default::default()
        };
        let plants: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
        let pairs = cfg.zeroshot_pairs(&plants);
        assert_eq!(pairs.len(), 6);
        assert!(pairs.contains(&("B".to_string(), "A".to_string())));
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
