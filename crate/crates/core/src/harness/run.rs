use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use super::config::{ExperimentConfig, ModelKind, Protocol, SourceKind};
use super::report::{sort_rows, summarize, write_csv, write_report, ReportRow};
use crate::backbone::{hash_arrays, Backbone};
use crate::baselines::{DLinear, Persistence};
use crate::dataio::{
    default_fixture, format_timestamp, limit_fraction, load_series, preprocess, AuditedSplits, PlantManifest,
    PlantRegistry, SplitKind, TimeSeries, WindowSet,
};
use crate::error::{Error, Result};
use crate::trainer::{evaluate, train, Forecast, Forecaster, PromptEncoder, TrainConfig, TrainHistory};

/// Cleaned, capacity-normalized series for every plant of the data source.
pub fn load_plants(cfg: &ExperimentConfig) -> Result<Vec<(PlantManifest, TimeSeries)>> {
    match cfg.data.source {
        SourceKind::Synthetic => default_fixture(cfg.data.days, cfg.data.seed),
        SourceKind::Dir => {
            let dir = cfg
                .data
                .dir
                .as_deref()
                .ok_or_else(|| Error::config("data.source = \"dir\" needs data.dir"))?;
            let registry = PlantRegistry::load(&dir.join("plants.toml"))?;
            registry
                .plants
                .into_iter()
                .map(|m| {
                    let raw = load_series(&dir.join(m.csv_name()), &m)?;
                    let clean = preprocess(raw, &m)?;
                    Ok((m, clean))
                })
                .collect()
        }
    }
}

/// The plants an experiment refers to, in configured order.
pub fn select_plants(cfg: &ExperimentConfig, all: &[(PlantManifest, TimeSeries)]) -> Result<Vec<TimeSeries>> {
    let ids: Vec<String> = if cfg.plants.is_empty() {
        all.iter().map(|(m, _)| m.plant_id.clone()).collect()
    } else {
        cfg.plants.clone()
    };
    ids.iter()
        .map(|id| {
            all.iter()
                .find(|(m, _)| &m.plant_id == id)
                .map(|(_, s)| s.clone())
                .ok_or_else(|| Error::config(format!("no data for plant {id}")))
        })
        .collect()
}

/// A trained forecaster of any kind.
pub enum FittedModel {
    Tsreprogram(Box<Forecaster>),
    Persistence(Persistence),
    Dlinear(DLinear),
}

impl FittedModel {
    pub fn as_forecast(&self) -> &dyn Forecast {
        match self {
            FittedModel::Tsreprogram(f) => f.as_ref(),
            FittedModel::Persistence(p) => p,
            FittedModel::Dlinear(d) => d,
        }
    }

    /// Hash of every parameter that training could change.
    pub fn fingerprint(&self) -> String {
        match self {
            FittedModel::Tsreprogram(f) => f.params.hash(),
            FittedModel::Persistence(_) => hash_arrays(std::iter::empty::<(&str, _)>()),
            FittedModel::Dlinear(d) => {
                hash_arrays([("dlinear.trend", &d.w_trend), ("dlinear.seasonal", &d.w_seasonal)].into_iter())
            }
        }
    }
}

/// Builds and trains one model. `encoder` supplies the frozen backbone and
/// its prompt-state cache for the reprogrammed forecaster.
pub fn fit_model(
    kind: ModelKind,
    cfg: &ExperimentConfig,
    encoder: &Arc<PromptEncoder>,
    train_set: &WindowSet,
    val_set: &WindowSet,
    seed: u64,
) -> Result<(FittedModel, Option<TrainHistory>)> {
    let (l, h) = (train_set.input_len(), train_set.horizon());
    let tc = TrainConfig { seed, ..cfg.train.clone() };
    match kind {
        ModelKind::Persistence => Ok((FittedModel::Persistence(Persistence { input_len: l, horizon: h }), None)),
        ModelKind::Dlinear => {
            let mut m = DLinear::new(l, h, cfg.model.dlinear_kernel)?;
            let hist = m.fit(train_set, val_set, &tc)?;
            Ok((FittedModel::Dlinear(m), Some(hist)))
        }
        ModelKind::Tsreprogram => {
            let mut f = Forecaster::with_encoder(cfg.model.model_config(l, h), encoder.clone(), seed)?;
            let hist = train(&mut f, train_set, val_set, &tc)?;
            Ok((FittedModel::Tsreprogram(Box::new(f)), Some(hist)))
        }
    }
}

/// Bookkeeping for one report row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseLog {
    pub protocol: String,
    pub source: String,
    pub plant: String,
    pub horizon: usize,
    pub model: String,
    pub fraction: Option<f64>,
    pub seed: u64,
    pub train_windows_available: usize,
    pub train_windows: usize,
    pub val_windows: usize,
    pub test_windows: usize,
    pub epochs: usize,
    pub steps: usize,
    pub best_epoch: Option<usize>,
    pub params_hash: String,
}

#[derive(Serialize)]
struct TraceRow<'a> {
    timestamp: String,
    truth: f64,
    forecast: f64,
    model: &'a str,
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub rows: Vec<ReportRow>,
    pub cases: Vec<CaseLog>,
    pub report_path: PathBuf,
    pub summary_path: PathBuf,
    pub cases_path: PathBuf,
    pub traces: Vec<PathBuf>,
}

/// One (source, target, horizon) combination; source and target coincide
/// except under zero-shot.
struct Unit<'a> {
    source: &'a TimeSeries,
    target: &'a TimeSeries,
    horizon: usize,
}

fn trace_name(protocol: Protocol, unit: &Unit, model: ModelKind, fraction: Option<f64>, seed: u64) -> String {
    let scope = if protocol == Protocol::Zeroshot {
        format!("{}-to-{}", unit.source.plant_id, unit.target.plant_id)
    } else {
        unit.target.plant_id.clone()
    };
    let frac = fraction.map(|p| format!("_p{p}")).unwrap_or_default();
    format!("{protocol}_{scope}_h{}_{model}{frac}_s{seed}.csv", unit.horizon)
}

fn write_trace(path: &Path, model: &dyn Forecast, windows: &WindowSet, series: &TimeSeries) -> Result<()> {
    let mut rows = Vec::with_capacity(windows.len() * windows.horizon());
    let forecasts = evaluate(model, windows)?.forecasts;
    for (w, f) in windows.iter().zip(&forecasts) {
        for (j, (&truth, &forecast)) in w.target.iter().zip(f).enumerate() {
            rows.push(TraceRow {
                timestamp: format_timestamp(series.timestamp(w.origin + windows.input_len() + j)),
                truth,
                forecast,
                model: model.label(),
            });
        }
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(std::io::BufWriter::new(file), &rows)
}

/// Runs every case of `cfg`, then writes `report.csv`, `summary.csv`,
/// `cases.csv` and (optionally) per-case traces under `out_dir`.
///
/// Zero-shot cases train on the source plant only. The trained parameters
/// are hashed before and after the target evaluation, and the target plant's
/// split audit must show test reads only; either violation is an error.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let all = load_plants(cfg)?;
    let plants = select_plants(cfg, &all)?;
    let trace_dir = out_dir.join("traces");
    std::fs::create_dir_all(&trace_dir).map_err(|e| Error::io(&trace_dir, e))?;

    let backbone = Arc::new(Backbone::new(cfg.model.backbone)?);
    let find = |id: &str| {
        plants
            .iter()
            .find(|s| s.plant_id == id)
            .ok_or_else(|| Error::config(format!("no data for plant {id}")))
    };
    let mut units = Vec::new();
    for &horizon in &cfg.horizons() {
        if cfg.protocol == Protocol::Zeroshot {
            let ids: Vec<String> = plants.iter().map(|s| s.plant_id.clone()).collect();
            for (s, t) in cfg.zeroshot_pairs(&ids) {
                units.push(Unit {
                    source: find(&s)?,
                    target: find(&t)?,
                    horizon,
                });
            }
        } else {
            for s in &plants {
                units.push(Unit {
                    source: s,
                    target: s,
                    horizon,
                });
            }
        }
    }

    let mut rows = Vec::new();
    let mut cases = Vec::new();
    let mut traces = Vec::new();
    for unit in &units {
        run_unit(cfg, unit, &backbone, &trace_dir, &mut rows, &mut cases, &mut traces)?;
    }

    sort_rows(&mut rows);
    let report_path = out_dir.join("report.csv");
    write_report(&report_path, &rows)?;
    let summary_path = out_dir.join("summary.csv");
    let summary = summarize(&rows)?;
    let file = std::fs::File::create(&summary_path).map_err(|e| Error::io(&summary_path, e))?;
    write_csv(std::io::BufWriter::new(file), &summary)?;
    let cases_path = out_dir.join("cases.csv");
    let file = std::fs::File::create(&cases_path).map_err(|e| Error::io(&cases_path, e))?;
    write_csv(std::io::BufWriter::new(file), &cases)?;
    Ok(ExperimentOutput {
        rows,
        cases,
        report_path,
        summary_path,
        cases_path,
        traces,
    })
}

fn run_unit(
    cfg: &ExperimentConfig,
    unit: &Unit,
    backbone: &Arc<Backbone>,
    trace_dir: &Path,
    rows: &mut Vec<ReportRow>,
    cases: &mut Vec<CaseLog>,
    traces: &mut Vec<PathBuf>,
) -> Result<()> {
    let zeroshot = cfg.protocol == Protocol::Zeroshot;
    let h = unit.horizon;
    let l = cfg.input_len(h);
    let ws = cfg.windows;
    let source = AuditedSplits::new(unit.source.clone())?;
    let target = if zeroshot {
        AuditedSplits::new(unit.target.clone())?
    } else {
        AuditedSplits::new(unit.source.clone())?
    };
    let splits = |s: &AuditedSplits, kind, stride| {
        s.windows(kind, l, h, stride)
            .map_err(|e| Error::data(format!("plant {}, {kind} split, L={l} H={h}: {e}", s.plant_id())))
    };
    let train_full = splits(&source, SplitKind::Train, ws.train_stride)?;
    let val = splits(&source, SplitKind::Val, ws.val_stride)?;
    let test = splits(&target, SplitKind::Test, ws.test_stride)?;
    let trace_windows = if cfg.traces {
        Some(splits(&target, SplitKind::Test, h)?)
    } else {
        None
    };
    let encoder = Arc::new(PromptEncoder::new(backbone.clone()));

    let fractions: Vec<Option<f64>> = if cfg.protocol == Protocol::Fewshot {
        cfg.fractions.iter().map(|&p| Some(p)).collect()
    } else {
        vec![None]
    };
    for fraction in fractions {
        let train_set = match fraction {
            Some(p) => {
                let t = limit_fraction(&train_full, p)?;
                log::info!(
                    "few-shot p={p}: plant {} H={h} uses {} of {} training windows",
                    unit.source.plant_id,
                    t.len(),
                    train_full.len()
                );
                t
            }
            None => train_full.clone(),
        };
        for &seed in &cfg.seeds {
            for &kind in &cfg.models {
                log::info!(
                    "{} {}{} H={h} L={l} {kind} seed {seed}{}",
                    cfg.protocol,
                    if zeroshot { format!("{}->", unit.source.plant_id) } else { String::new() },
                    unit.target.plant_id,
                    fraction.map(|p| format!(" p={p}")).unwrap_or_default()
                );
                let (model, history) = fit_model(kind, cfg, &encoder, &train_set, &val, seed)?;
                let before = model.fingerprint();
                let eval = evaluate(model.as_forecast(), &test)?;
                if let Some(tw) = &trace_windows {
                    let path = trace_dir.join(trace_name(cfg.protocol, unit, kind, fraction, seed));
                    write_trace(&path, model.as_forecast(), tw, unit.target)?;
                    traces.push(path);
                }
                let after = model.fingerprint();
                if before != after {
                    return Err(Error::Numeric(format!(
                        "{kind} parameters changed while evaluating plant {}",
                        unit.target.plant_id
                    )));
                }
                let mut row = ReportRow {
                    plant: unit.target.plant_id.clone(),
                    horizon: h,
                    protocol: cfg.protocol.to_string(),
                    model: kind.to_string(),
                    source: if zeroshot { unit.source.plant_id.clone() } else { String::new() },
                    fraction,
                    seed,
                    input_len: l,
                    train_windows: train_set.len(),
                    test_windows: test.len(),
                    mse: 0.0,
                    mae: 0.0,
                    r2_raw: 0.0,
                    r2_reported: 0.0,
                    smape: 0.0,
                };
                row.set_metrics(&eval.report);
                rows.push(row);
                cases.push(CaseLog {
                    protocol: cfg.protocol.to_string(),
                    source: unit.source.plant_id.clone(),
                    plant: unit.target.plant_id.clone(),
                    horizon: h,
                    model: kind.to_string(),
                    fraction,
                    seed,
                    train_windows_available: train_full.len(),
                    train_windows: train_set.len(),
                    val_windows: val.len(),
                    test_windows: test.len(),
                    epochs: history.as_ref().map_or(0, |h| h.epochs.len()),
                    steps: history.as_ref().map_or(0, |h| h.steps),
                    best_epoch: history.as_ref().and_then(|h| h.best_epoch),
                    params_hash: after,
                });
            }
        }
    }
    if zeroshot {
        let touched = target.accesses();
        if touched.iter().any(|k| *k != SplitKind::Test) {
            return Err(Error::data(format!(
                "zero-shot run read target plant {} splits {:?}",
                unit.target.plant_id, touched
            )));
        }
    }
    Ok(())
}
