use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{Forecaster, PreparedWindow};
use crate::dataio::WindowSet;
use crate::error::{Error, Result};
use crate::numerics::{adam_step, seeded_rng, AdamConfig, AdamState, Matrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub patience: usize,
    /// Seeds the per-epoch shuffle.
    pub seed: u64,
    /// Stop after this many optimizer steps, if set.
    pub max_steps: Option<usize>,
    /// Rescale gradients whose global L2 norm exceeds this, if set.
    pub grad_clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 50,
            batch_size: 16,
            lr: 1e-3,
            patience: 5,
            seed: 0,
            max_steps: None,
            grad_clip: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be positive"));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::config(format!("invalid learning rate {}", self.lr)));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return Err(Error::config("grad_clip must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub steps: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub steps: usize,
    /// Epoch whose parameters were kept (best validation loss).
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

fn validation_loss(model: &Forecaster, val: &[PreparedWindow], targets: &[&[f64]]) -> Result<f64> {
    let mut total = 0.0;
    for chunk in val.iter().zip(targets).collect::<Vec<_>>().chunks(64) {
        let batch: Vec<(&PreparedWindow, &[f64])> = chunk.iter().map(|(w, t)| (*w, **t)).collect();
        total += model.batch_loss(&model.params, &batch)? * batch.len() as f64;
    }
    Ok(total / val.len() as f64)
}

/// Minibatch Adam on the trainable modules with early stopping on the
/// validation loss. The parameters from the best validation epoch are kept.
pub fn train(model: &mut Forecaster, train: &WindowSet, val: &WindowSet, cfg: &TrainConfig) -> Result<TrainHistory> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::config("training set is empty"));
    }
    let backbone_hash = model.backbone().weights_hash();
    let prepared: Vec<PreparedWindow> = train.iter().map(|w| model.prepare(w.input)).collect::<Result<_>>()?;
    let targets: Vec<&[f64]> = train.iter().map(|w| w.target).collect();
    let val_prepared: Vec<PreparedWindow> = val.iter().map(|w| model.prepare(w.input)).collect::<Result<_>>()?;
    let val_targets: Vec<&[f64]> = val.iter().map(|w| w.target).collect();

    let adam = AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    };
    let mut states: Vec<AdamState> = model.params.params().iter().map(|p| AdamState::for_param(adam, p)).collect();
    let mut rng = seeded_rng(cfg.seed, 0x5F1E);
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, crate::trainer::Trainables)> = None;
    let mut since_best = 0;

    'epochs: for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        let mut seen = 0;
        for idx in order.chunks(cfg.batch_size) {
            if cfg.max_steps.is_some_and(|m| history.steps >= m) {
                break;
            }
            let batch: Vec<(&PreparedWindow, &[f64])> = idx.iter().map(|&i| (&prepared[i], targets[i])).collect();
            let (loss, mut grads) = model.batch_gradient(&model.params, &batch)?;
            if let Some(clip) = cfg.grad_clip {
                clip_global_norm(&mut grads, clip);
            }
            for ((p, g), s) in model.params.params_mut().into_iter().zip(&grads).zip(&mut states) {
                adam_step(s, p, g)?;
            }
            history.steps += 1;
            sum += loss * batch.len() as f64;
            seen += batch.len();
        }
        if seen == 0 {
            break;
        }
        let val_loss = if val_prepared.is_empty() {
            None
        } else {
            Some(validation_loss(model, &val_prepared, &val_targets)?)
        };
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: sum / seen as f64,
            val_loss,
            steps: history.steps,
        });
        log::debug!("epoch {epoch}: train {:.6} val {:?}", sum / seen as f64, val_loss);
        if let Some(v) = val_loss {
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, model.params.clone()));
                history.best_epoch = Some(epoch);
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= cfg.patience {
                    history.stopped_early = true;
                    break 'epochs;
                }
            }
        }
        if cfg.max_steps.is_some_and(|m| history.steps >= m) {
            break;
        }
    }
    if let Some((_, params)) = best {
        model.params = params;
    }
    if model.backbone().weights_hash() != backbone_hash {
        return Err(Error::Numeric("backbone weights changed during training".into()));
    }
    Ok(history)
}

fn clip_global_norm(grads: &mut [Matrix], max_norm: f64) {
    let norm = grads.iter().map(Matrix::frobenius_sq).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        for g in grads.iter_mut() {
            *g = g.scale(s);
        }
    }
}
