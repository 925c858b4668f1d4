//! The full forecaster and its training loop.
//!
//! Pipeline per window: statistics → prompt → token embeddings → backbone
//! prefix state; patches → embedding → reprogramming → backbone suffix →
//! projection. Only the patch embedder, the reprogramming layer and the
//! projection head are trainable.

mod model;
mod objective;
mod prompt_cache;
mod train;

pub use model::{Forecaster, ModelConfig, PreparedWindow, Trainables};
pub use objective::ForecastObjective;
pub use prompt_cache::PromptEncoder;
pub use train::{train, EpochRecord, TrainConfig, TrainHistory};

use crate::dataio::WindowSet;
use crate::error::{Error, Result};
use crate::metrics::{evaluate_pairs, MetricsReport};

/// Anything that maps an input window to a forecast.
pub trait Forecast {
    fn label(&self) -> &'static str;
    fn input_len(&self) -> usize;
    fn horizon(&self) -> usize;
    fn predict(&self, input: &[f64]) -> Result<Vec<f64>>;
}

/// Per-window forecasts with the metrics over all of them.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub forecasts: Vec<Vec<f64>>,
}

/// `(1/H)·Σ(yᵢ − ŷᵢ)²`.
pub fn mse_loss(forecast: &[f64], target: &[f64]) -> Result<f64> {
    crate::metrics::mse(target, forecast)
}

/// Forecasts every window and scores the concatenated pairs.
pub fn evaluate(model: &dyn Forecast, windows: &WindowSet) -> Result<Evaluation> {
    if windows.is_empty() {
        return Err(Error::config("cannot evaluate on an empty window set"));
    }
    if windows.input_len() != model.input_len() || windows.horizon() != model.horizon() {
        return Err(Error::shape(format!(
            "windows are L={} H={}, model expects L={} H={}",
            windows.input_len(),
            windows.horizon(),
            model.input_len(),
            model.horizon()
        )));
    }
    let mut truth = Vec::with_capacity(windows.len() * windows.horizon());
    let mut flat = Vec::with_capacity(truth.capacity());
    let mut forecasts = Vec::with_capacity(windows.len());
    for w in windows.iter() {
        let f = model.predict(w.input)?;
        truth.extend_from_slice(w.target);
        flat.extend_from_slice(&f);
        forecasts.push(f);
    }
    Ok(Evaluation {
        report: evaluate_pairs(&truth, &flat)?,
        forecasts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_values() {
        assert_eq!(mse_loss(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(mse_loss(&[1.0, 1.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert!((mse_loss(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(mse_loss(&[1.0], &[1.0, 2.0]).is_err());
    }
}
