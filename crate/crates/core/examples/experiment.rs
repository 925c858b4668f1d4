//! A small short-horizon experiment across all three plants with the report
//! and summary written to a temporary directory.
//!
//! cargo run --release --example experiment [-- config.toml]

use tsreprogram::harness::{run_experiment, ExperimentConfig, ModelKind, Protocol, WindowConfig};
use tsreprogram::trainer::TrainConfig;

fn main() -> tsreprogram::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path.as_ref())?,
        None => ExperimentConfig {
            protocol: Protocol::Short,
            horizons: vec![12],
            seeds: vec![0],
            models: vec![ModelKind::Tsreprogram, ModelKind::Persistence, ModelKind::Dlinear],
            windows: WindowConfig {
                train_stride: 12,
                val_stride: 12,
                test_stride: 6,
            },
            train: TrainConfig {
                max_epochs: 10,
                patience: 3,
                ..TrainConfig::default()
            },
            ..ExperimentConfig::default()
        },
    };
    let out_dir = std::env::temp_dir().join("tsrp-example-experiment");
    let out = run_experiment(&cfg, &out_dir)?;
    for r in &out.rows {
        println!("{} H={} {:<12} seed {}  MSE {:.5}  R² {:.3}", r.plant, r.horizon, r.model, r.seed, r.mse, r.r2_raw);
    }
    println!("\n{}", std::fs::read_to_string(&out.summary_path).map_err(|e| tsreprogram::Error::io(&out.summary_path, e))?);
    println!("report at {}", out.report_path.display());
    Ok(())
}
