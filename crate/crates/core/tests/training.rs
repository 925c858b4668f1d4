use std::sync::Arc;

use tsreprogram::backbone::hash_arrays;
use tsreprogram::baselines::{DLinear, Persistence};
use tsreprogram::checkpoint::Container;
use tsreprogram::dataio::{default_fixture, make_windows, AuditedSplits, SplitKind, WindowSet};
use tsreprogram::numerics::grad_check;
use tsreprogram::reprogrammer::AttentionConfig;
use tsreprogram::trainer::{evaluate, train, ForecastObjective, Forecaster, ModelConfig, PromptEncoder, TrainConfig};

fn plant_a() -> AuditedSplits {
    let (_, series) = default_fixture(60, 0).unwrap().remove(0);
    AuditedSplits::new(series).unwrap()
}

/// Windows starting at 09:00 on consecutive days, so every one has sun in it.
fn daytime_windows(splits: &AuditedSplits, l: usize, h: usize, n: usize) -> WindowSet {
    let all = splits.windows(SplitKind::Train, l, h, 1).unwrap();
    let idx: Vec<usize> = (0..n).map(|d| d * 288 + 108).collect();
    all.select(&idx)
}

#[test]
fn small_model_gradients_match_finite_differences() {
    let mut cfg = ModelConfig::new(24, 4);
    cfg.attention = AttentionConfig {
        heads: 2,
        d_head: 4,
        prototypes: 6,
        dropout: 0.0,
    };
    let model = Forecaster::new(cfg, 5).unwrap();
    let splits = plant_a();
    let w = daytime_windows(&splits, 24, 4, 2);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = w.iter().map(|w| (w.input.to_vec(), w.target.to_vec())).collect();
    let objective = ForecastObjective::new(&model, &pairs).unwrap();
    let report = grad_check(&objective, 1e-5, 1e-4).unwrap();
    assert!(report.passed(), "max rel err {:e}", report.max_rel_err());
    let names: Vec<&str> = report.params.iter().map(|p| p.name.as_str()).collect();
    assert!(!names.iter().any(|n| n.starts_with("embed") || n.starts_with("layers")));
    assert_eq!(report.scalars_checked(), model.config().trainable_count().unwrap());
}

#[test]
fn training_leaves_backbone_untouched() {
    let splits = plant_a();
    let train_set = splits.windows(SplitKind::Train, 24, 12, 37).unwrap();
    let mut model = Forecaster::new(ModelConfig::new(24, 12), 0).unwrap();
    let arrays_before: Vec<String> = model
        .backbone()
        .named_arrays()
        .into_iter()
        .map(|(n, m)| hash_arrays(std::iter::once((n, m))))
        .collect();
    let before = model.params.clone();
    let cfg = TrainConfig {
        max_steps: Some(50),
        ..TrainConfig::default()
    };
    let history = train(&mut model, &train_set, &train_set.select(&[]), &cfg).unwrap();
    assert_eq!(history.steps, 50);
    let arrays_after: Vec<String> = model
        .backbone()
        .named_arrays()
        .into_iter()
        .map(|(n, m)| hash_arrays(std::iter::once((n, m))))
        .collect();
    assert_eq!(arrays_before, arrays_after);
    assert_ne!(before.embedder, model.params.embedder);
    assert_ne!(before.reprogrammer, model.params.reprogrammer);
    assert_ne!(before.head, model.params.head);
}

#[test]
fn checkpoint_restores_identical_forecasts() {
    let splits = plant_a();
    let w = daytime_windows(&splits, 24, 12, 4);
    let mut model = Forecaster::new(ModelConfig::new(24, 12), 1).unwrap();
    let cfg = TrainConfig {
        max_steps: Some(5),
        batch_size: 2,
        ..TrainConfig::default()
    };
    train(&mut model, &w, &w.select(&[]), &cfg).unwrap();
    let bytes = model.to_container().unwrap().to_bytes().unwrap();
    let back = Forecaster::from_container(&Container::from_bytes(&bytes).unwrap()).unwrap();
    for win in w.iter() {
        assert_eq!(model.forward_window(win.input).unwrap(), back.forward_window(win.input).unwrap());
    }
}

#[test]
fn shared_prompt_cache_does_not_change_results() {
    let splits = plant_a();
    let w = daytime_windows(&splits, 24, 12, 3);
    let cfg = ModelConfig::new(24, 12);
    let alone = Forecaster::new(cfg.clone(), 2).unwrap();
    let shared = Arc::new(PromptEncoder::new(Arc::new(tsreprogram::backbone::Backbone::new(cfg.backbone).unwrap())));
    let warm = Forecaster::with_encoder(cfg.clone(), shared.clone(), 9).unwrap();
    for win in w.iter() {
        warm.forward_window(win.input).unwrap();
    }
    let reused = Forecaster::with_encoder(cfg, shared, 2).unwrap();
    for win in w.iter() {
        assert_eq!(alone.forward_window(win.input).unwrap(), reused.forward_window(win.input).unwrap());
    }
}

#[test]
fn dlinear_beats_persistence_on_fixture() {
    let splits = plant_a();
    let (l, h) = (48, 24);
    let tr = splits.windows(SplitKind::Train, l, h, 4).unwrap();
    let va = splits.windows(SplitKind::Val, l, h, 4).unwrap();
    let te = splits.windows(SplitKind::Test, l, h, 2).unwrap();
    let mut m = DLinear::new(l, h, 25).unwrap();
    let cfg = TrainConfig {
        max_epochs: 20,
        lr: 1e-2,
        ..TrainConfig::default()
    };
    m.fit(&tr, &va, &cfg).unwrap();
    let d = evaluate(&m, &te).unwrap().report.mse;
    let p = evaluate(&Persistence { input_len: l, horizon: h }, &te).unwrap().report.mse;
    assert!(d < p, "dlinear {d} vs persistence {p}");
}

#[test]
fn dlinear_extrapolates_ramps() {
    // Ramps with assorted slopes and offsets; the target continues each ramp.
    let (l, h) = (24, 6);
    let mut values = Vec::new();
    for r in 0..400 {
        let slope = 0.001 + 0.0001 * (r % 17) as f64;
        let offset = 0.05 * (r % 7) as f64;
        values.extend((0..l + h).map(|t| offset + slope * t as f64));
    }
    let n = values.len();
    let w = make_windows(values.into(), 0..n, l, h, l + h).unwrap();
    let mut m = DLinear::new(l, h, 5).unwrap();
    let cfg = TrainConfig {
        max_epochs: 200,
        lr: 1e-2,
        batch_size: 32,
        ..TrainConfig::default()
    };
    m.fit(&w, &w.select(&[]), &cfg).unwrap();
    let x: Vec<f64> = (0..l).map(|t| 0.1 + 0.0015 * t as f64).collect();
    let y = m.forward(&x).unwrap();
    for (j, v) in y.iter().enumerate() {
        let truth = 0.1 + 0.0015 * (l + j) as f64;
        assert!(((v - truth) / truth).abs() < 0.05, "step {j}: {v} vs {truth}");
    }
}

#[test]
fn memorizes_eight_windows() {
    let splits = plant_a();
    let eight = daytime_windows(&splits, 48, 24, 8);
    let config = ModelConfig {
        standardize: true,
        ..ModelConfig::new(48, 24)
    };
    let mut model = Forecaster::new(config, 0).unwrap();
    let cfg = TrainConfig {
        max_epochs: 500,
        batch_size: 8,
        max_steps: Some(500),
        ..TrainConfig::default()
    };
    let history = train(&mut model, &eight, &eight.select(&[]), &cfg).unwrap();
    assert!(history.steps <= 500);
    assert!(history.epochs.last().unwrap().train_loss < 1e-3);
    assert!(evaluate(&model, &eight).unwrap().report.mse < 1e-3);
}
