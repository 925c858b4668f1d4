//! Trains the reprogrammed forecaster on one plant, scores it against
//! persistence on the test split and round-trips the checkpoint.
//!
//! cargo run --release --example train_forecast

use tsreprogram::baselines::Persistence;
use tsreprogram::dataio::{default_fixture, AuditedSplits, SplitKind};
use tsreprogram::trainer::{evaluate, train, Forecast, Forecaster, ModelConfig, TrainConfig};

fn main() -> tsreprogram::Result<()> {
    env_logger::init();
    let (l, h) = (48, 24);
    let (_, series) = default_fixture(60, 0)?.remove(0);
    let splits = AuditedSplits::new(series)?;
    let train_set = splits.windows(SplitKind::Train, l, h, 12)?;
    let val_set = splits.windows(SplitKind::Val, l, h, 12)?;
    let test_set = splits.windows(SplitKind::Test, l, h, 6)?;
    println!("windows: {} train, {} val, {} test", train_set.len(), val_set.len(), test_set.len());

    let config = ModelConfig::new(l, h);
    println!("{} trainable scalars, {} patches", config.trainable_count()?, config.patch_count()?);
    let mut model = Forecaster::new(config, 0)?;
    let cfg = TrainConfig {
        max_epochs: 6,
        ..TrainConfig::default()
    };
    let history = train(&mut model, &train_set, &val_set, &cfg)?;
    for e in &history.epochs {
        println!("epoch {:>2}  train {:.5}  val {:.5}", e.epoch, e.train_loss, e.val_loss.unwrap_or(f64::NAN));
    }

    let ours = evaluate(&model, &test_set)?.report;
    let naive = evaluate(&Persistence { input_len: l, horizon: h }, &test_set)?.report;
    println!("test MSE {:.5} (persistence {:.5}), R² {:.3}, SMAPE {:.1}", ours.mse, naive.mse, ours.r2_raw, ours.smape);

    let path = std::env::temp_dir().join("tsrp-example-model.tsrp");
    model.save(&path)?;
    let restored = Forecaster::load(&path)?;
    let w = test_set.get(0);
    assert_eq!(model.predict(w.input)?, restored.predict(w.input)?);
    println!("checkpoint {} reloads to identical forecasts", path.display());
    Ok(())
}
