//! Reference forecasters: last-value persistence and a decomposition-linear
//! model (moving-average trend plus remainder, one linear map each).

use std::path::Path;

use rand::seq::SliceRandom;

use crate::checkpoint::Container;
use crate::dataio::WindowSet;
use crate::error::{Error, Result};
use crate::numerics::{adam_step, seeded_rng, AdamConfig, AdamState, Matrix, Tape};
use crate::trainer::{EpochRecord, Forecast, TrainConfig, TrainHistory};

pub const DEFAULT_KERNEL: usize = 25;

/// Repeats the last observed value.
#[derive(Clone, Copy, Debug)]
pub struct Persistence {
    pub input_len: usize,
    pub horizon: usize,
}

pub fn persistence(x: &[f64], horizon: usize) -> Result<Vec<f64>> {
    let last = *x.last().ok_or_else(|| Error::shape("persistence needs at least one point"))?;
    Ok(vec![last; horizon])
}

impl Forecast for Persistence {
    fn label(&self) -> &'static str {
        "persistence"
    }

    fn input_len(&self) -> usize {
        self.input_len
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        persistence(input, self.horizon)
    }
}

/// Centered moving average with the series edges replicated.
pub fn moving_average(x: &[f64], kernel: usize) -> Result<Vec<f64>> {
    if kernel == 0 || kernel % 2 == 0 {
        return Err(Error::config(format!("moving-average kernel must be odd, got {kernel}")));
    }
    if x.is_empty() {
        return Err(Error::shape("moving average of an empty series"));
    }
    let half = kernel / 2;
    let n = x.len() as isize;
    let at = |i: isize| x[i.clamp(0, n - 1) as usize];
    Ok((0..n)
        .map(|i| (i - half as isize..=i + half as isize).map(at).sum::<f64>() / kernel as f64)
        .collect())
}

/// `(trend, seasonal)` with `seasonal = x − trend`.
pub fn decompose(x: &[f64], kernel: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let trend = moving_average(x, kernel)?;
    let seasonal = x.iter().zip(&trend).map(|(a, t)| a - t).collect();
    Ok((trend, seasonal))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DLinear {
    pub kernel: usize,
    /// `H × L`, applied to the trend.
    pub w_trend: Matrix,
    /// `H × L`, applied to the remainder.
    pub w_seasonal: Matrix,
}

impl DLinear {
    /// Both maps start at zero.
    pub fn new(input_len: usize, horizon: usize, kernel: usize) -> Result<Self> {
        if input_len == 0 || horizon == 0 {
            return Err(Error::config("DLinear needs positive input length and horizon"));
        }
        moving_average(&[0.0], kernel)?;
        Ok(DLinear {
            kernel,
            w_trend: Matrix::zeros(horizon, input_len),
            w_seasonal: Matrix::zeros(horizon, input_len),
        })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.w_trend.cols() {
            return Err(Error::shape(format!(
                "DLinear expects {} inputs, got {}",
                self.w_trend.cols(),
                x.len()
            )));
        }
        let (t, s) = decompose(x, self.kernel)?;
        let y = Matrix::row_vector(&t)
            .matmul_t(&self.w_trend)?
            .add(&Matrix::row_vector(&s).matmul_t(&self.w_seasonal)?)?;
        Ok(y.into_vec())
    }

    fn decomposed_rows(&self, windows: &WindowSet, idx: &[usize]) -> Result<(Matrix, Matrix, Matrix)> {
        let (l, h) = (windows.input_len(), windows.horizon());
        let mut t = Vec::with_capacity(idx.len() * l);
        let mut s = Vec::with_capacity(idx.len() * l);
        let mut y = Vec::with_capacity(idx.len() * h);
        for &i in idx {
            let w = windows.get(i);
            let (tr, se) = decompose(w.input, self.kernel)?;
            t.extend(tr);
            s.extend(se);
            y.extend_from_slice(w.target);
        }
        Ok((
            Matrix::from_vec(idx.len(), l, t)?,
            Matrix::from_vec(idx.len(), l, s)?,
            Matrix::from_vec(idx.len(), h, y)?,
        ))
    }

    fn loss_and_grads(&self, t: &Matrix, s: &Matrix, y: &Matrix) -> Result<(f64, Matrix, Matrix)> {
        let mut tape = Tape::new();
        let wt = tape.param(&self.w_trend);
        let ws = tape.param(&self.w_seasonal);
        let (tv, sv, yv) = (tape.constant(t), tape.constant(s), tape.constant(y));
        let a = tape.matmul_t(tv, wt)?;
        let b = tape.matmul_t(sv, ws)?;
        let pred = tape.add(a, b)?;
        let loss = tape.mse(pred, yv)?;
        let mut g = tape.backward(loss)?;
        let gt = g.take(wt).expect("trend map is a parameter");
        let gs = g.take(ws).expect("seasonal map is a parameter");
        Ok((tape.value(loss).get(0, 0), gt, gs))
    }

    fn set_loss(&self, windows: &WindowSet) -> Result<f64> {
        let idx: Vec<usize> = (0..windows.len()).collect();
        let (t, s, y) = self.decomposed_rows(windows, &idx)?;
        let pred = t.matmul_t(&self.w_trend)?.add(&s.matmul_t(&self.w_seasonal)?)?;
        Ok(pred.sub(&y)?.frobenius_sq() / y.len() as f64)
    }

    /// Minibatch Adam with the same schedule and early stopping as the
    /// main model.
    pub fn fit(&mut self, train: &WindowSet, val: &WindowSet, cfg: &TrainConfig) -> Result<TrainHistory> {
        cfg.validate()?;
        if train.is_empty() {
            return Err(Error::config("training set is empty"));
        }
        if train.input_len() != self.w_trend.cols() || train.horizon() != self.w_trend.rows() {
            return Err(Error::shape("window shape does not match the DLinear maps"));
        }
        let adam = AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        };
        let mut st = AdamState::for_param(adam, &self.w_trend);
        let mut ss = AdamState::for_param(adam, &self.w_seasonal);
        let mut rng = seeded_rng(cfg.seed, 0xD11);
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut history = TrainHistory::default();
        let mut best: Option<(f64, Matrix, Matrix)> = None;
        let mut since_best = 0;
        for epoch in 0..cfg.max_epochs {
            order.shuffle(&mut rng);
            let (mut sum, mut seen) = (0.0, 0);
            for idx in order.chunks(cfg.batch_size) {
                if cfg.max_steps.is_some_and(|m| history.steps >= m) {
                    break;
                }
                let (t, s, y) = self.decomposed_rows(train, idx)?;
                let (loss, gt, gs) = self.loss_and_grads(&t, &s, &y)?;
                adam_step(&mut st, &mut self.w_trend, &gt)?;
                adam_step(&mut ss, &mut self.w_seasonal, &gs)?;
                history.steps += 1;
                sum += loss * idx.len() as f64;
                seen += idx.len();
            }
            if seen == 0 {
                break;
            }
            let val_loss = if val.is_empty() { None } else { Some(self.set_loss(val)?) };
            history.epochs.push(EpochRecord {
                epoch,
                train_loss: sum / seen as f64,
                val_loss,
                steps: history.steps,
            });
            if let Some(v) = val_loss {
                if best.as_ref().is_none_or(|(b, _, _)| v < *b) {
                    best = Some((v, self.w_trend.clone(), self.w_seasonal.clone()));
                    history.best_epoch = Some(epoch);
                    since_best = 0;
                } else {
                    since_best += 1;
                    if since_best >= cfg.patience {
                        history.stopped_early = true;
                        break;
                    }
                }
            }
        }
        if let Some((_, t, s)) = best {
            self.w_trend = t;
            self.w_seasonal = s;
        }
        Ok(history)
    }

    /// Metadata is `{"model":"dlinear","kernel":k}`.
    pub fn to_container(&self) -> Container {
        let meta = serde_json::json!({ "model": "dlinear", "kernel": self.kernel }).to_string();
        let mut c = Container::new(meta);
        c.push("dlinear.trend", self.w_trend.clone());
        c.push("dlinear.seasonal", self.w_seasonal.clone());
        c
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        let meta: serde_json::Value =
            serde_json::from_str(&c.meta).map_err(|e| Error::format(format!("checkpoint metadata: {e}")))?;
        if meta["model"] != "dlinear" {
            return Err(Error::format("checkpoint does not hold a DLinear model"));
        }
        let kernel = meta["kernel"]
            .as_u64()
            .ok_or_else(|| Error::format("DLinear checkpoint lacks a kernel size"))? as usize;
        let trend = c
            .get("dlinear.trend")
            .ok_or_else(|| Error::format("missing array dlinear.trend"))?;
        let mut m = DLinear::new(trend.cols(), trend.rows(), kernel)?;
        m.w_trend = c.expect("dlinear.trend", trend.shape())?;
        m.w_seasonal = c.expect("dlinear.seasonal", trend.shape())?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_container().save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_container(&Container::load(path)?)
    }
}

impl Forecast for DLinear {
    fn label(&self) -> &'static str {
        "dlinear"
    }

    fn input_len(&self) -> usize {
        self.w_trend.cols()
    }

    fn horizon(&self) -> usize {
        self.w_trend.rows()
    }

    fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.forward(input)
    }
}
