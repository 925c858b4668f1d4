use tsreprogram::harness::{
    run_experiment, summarize, ExperimentConfig, ModelKind, Protocol, ReportRow, WindowConfig,
};
use tsreprogram::trainer::TrainConfig;

fn quick(protocol: Protocol, horizons: Vec<usize>) -> ExperimentConfig {
    ExperimentConfig {
        protocol,
        horizons,
        seeds: vec![0],
        windows: WindowConfig {
            train_stride: 96,
            val_stride: 192,
            test_stride: 96,
        },
        train: TrainConfig {
            max_epochs: 1,
            ..TrainConfig::default()
        },
        data: tsreprogram::harness::DataConfig {
            days: 30,
            ..Default::default()
        },
        traces: false,
        ..ExperimentConfig::default()
    }
}

#[test]
fn zero_shot_trains_on_source_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        pairs: vec![["A".into(), "B".into()]],
        models: vec![ModelKind::Tsreprogram, ModelKind::Dlinear],
        ..quick(Protocol::Zeroshot, vec![24])
    };
    let out = run_experiment(&cfg, dir.path()).unwrap();
    assert_eq!(out.rows.len(), 2);
    for r in &out.rows {
        assert_eq!((r.source.as_str(), r.plant.as_str()), ("A", "B"));
        assert_eq!(r.input_len, 336);
    }
    for c in &out.cases {
        assert_eq!(c.source, "A");
        assert_eq!(c.params_hash.len(), 64);
    }
}

#[test]
fn few_shot_uses_ceiling_prefix_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick(Protocol::Fewshot, vec![24]);
    let cfg = ExperimentConfig {
        plants: vec!["C".into()],
        models: vec![ModelKind::Dlinear],
        ..cfg
    };
    let out = run_experiment(&cfg, dir.path()).unwrap();
    assert_eq!(out.cases.len(), 4);
    for c in &out.cases {
        let p = c.fraction.unwrap();
        assert_eq!(c.train_windows as f64, (p * c.train_windows_available as f64).ceil());
    }
    let logged = std::fs::read_to_string(&out.cases_path).unwrap();
    assert_eq!(logged.lines().count(), 5);
}

#[test]
fn long_protocol_uses_336_steps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        plants: vec!["A".into()],
        models: vec![ModelKind::Persistence],
        ..quick(Protocol::Long, vec![96])
    };
    let out = run_experiment(&cfg, dir.path()).unwrap();
    assert!(out.rows.iter().all(|r| r.input_len == 336 && r.horizon == 96));
}

#[test]
fn missing_plant_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        plants: vec!["Z".into()],
        ..quick(Protocol::Short, vec![12])
    };
    assert!(matches!(run_experiment(&cfg, dir.path()), Err(tsreprogram::Error::Config(_))));
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = ExperimentConfig {
        plants: vec!["B".into()],
        seeds: vec![0, 1],
        models: vec![ModelKind::Tsreprogram, ModelKind::Dlinear],
        traces: true,
        ..quick(Protocol::Short, vec![12])
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_experiment(&cfg, a.path()).unwrap();
    let rb = run_experiment(&cfg, b.path()).unwrap();
    let read = |p: &std::path::Path| std::fs::read(p).unwrap();
    assert_eq!(read(&ra.report_path), read(&rb.report_path));
    assert_eq!(read(&ra.summary_path), read(&rb.summary_path));
    for (x, y) in ra.traces.iter().zip(&rb.traces) {
        assert_eq!(read(x), read(y));
    }
    let seeds: Vec<u64> = ra.rows.iter().filter(|r| r.model == "tsreprogram").map(|r| r.seed).collect();
    assert_eq!(seeds, vec![0, 1]);
}

fn row(plant: &str, model: &str, seed: u64, mse: f64, mae: f64, r2: f64, smape: f64) -> ReportRow {
    ReportRow {
        plant: plant.into(),
        horizon: 24,
        protocol: "short".into(),
        model: model.into(),
        source: String::new(),
        fraction: None,
        seed,
        input_len: 48,
        train_windows: 100,
        test_windows: 10,
        mse,
        mae,
        r2_raw: r2,
        r2_reported: r2.max(0.0),
        smape,
    }
}

#[test]
fn six_row_summary_matches_hand_means() {
    let rows = vec![
        row("A", "tsreprogram", 0, 0.010, 0.05, 0.90, 120.0),
        row("B", "tsreprogram", 0, 0.020, 0.07, 0.80, 130.0),
        row("C", "tsreprogram", 0, 0.030, 0.09, 0.70, 140.0),
        row("A", "persistence", 0, 0.040, 0.10, 0.50, 100.0),
        row("B", "persistence", 0, 0.050, 0.12, -0.20, 110.0),
        row("C", "persistence", 0, 0.060, 0.14, 0.30, 90.0),
    ];
    let s = summarize(&rows).unwrap();
    assert_eq!(s.len(), 2);
    let p = &s[0];
    assert_eq!((p.model.as_str(), p.plants, p.rows), ("persistence", 3, 3));
    assert!((p.mse - 0.05).abs() < 1e-15);
    assert!((p.mae - 0.12).abs() < 1e-15);
    assert!((p.r2_raw - 0.2).abs() < 1e-15);
    assert!((p.r2_reported - 0.8 / 3.0).abs() < 1e-15);
    assert!((p.smape - 100.0).abs() < 1e-12);
    let t = &s[1];
    assert!((t.mse - 0.02).abs() < 1e-15);
    assert!((t.mae - 0.07).abs() < 1e-15);
    assert!((t.r2_raw - 0.8).abs() < 1e-15);
    assert!((t.smape - 130.0).abs() < 1e-12);
    use tsreprogram::harness::Flag;
    assert_eq!((t.mse_flag, p.mse_flag), (Flag::Best, Flag::Second));
    assert_eq!((t.smape_flag, p.smape_flag), (Flag::Second, Flag::Best));
}
