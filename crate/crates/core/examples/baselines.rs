//! Persistence and DLinear on the same plant, plus the trend/seasonal split
//! DLinear is built on.
//!
//! cargo run --release --example baselines

use tsreprogram::baselines::{decompose, DLinear, Persistence};
use tsreprogram::dataio::{default_fixture, AuditedSplits, SplitKind};
use tsreprogram::trainer::{evaluate, TrainConfig};

fn main() -> tsreprogram::Result<()> {
    let (l, h) = (96, 48);
    let (_, series) = default_fixture(60, 2)?.remove(2);
    let splits = AuditedSplits::new(series)?;
    let train_set = splits.windows(SplitKind::Train, l, h, 6)?;
    let val_set = splits.windows(SplitKind::Val, l, h, 12)?;
    let test_set = splits.windows(SplitKind::Test, l, h, 6)?;

    let input = test_set.iter().map(|w| w.input).max_by(|a, b| a[48].total_cmp(&b[48])).unwrap_or(&[]);
    let (trend, seasonal) = decompose(input, 25)?;
    println!("brightest window at step 48: x {:.4} = trend {:.4} + seasonal {:.4}", input[48], trend[48], seasonal[48]);

    let mut dlinear = DLinear::new(l, h, 25)?;
    let cfg = TrainConfig {
        max_epochs: 20,
        lr: 1e-2,
        ..TrainConfig::default()
    };
    let history = dlinear.fit(&train_set, &val_set, &cfg)?;
    println!("dlinear stopped after {} epochs", history.epochs.len());

    let persistence = Persistence { input_len: l, horizon: h };
    for (name, report) in [
        ("persistence", evaluate(&persistence, &test_set)?.report),
        ("dlinear", evaluate(&dlinear, &test_set)?.report),
    ] {
        println!("{name:<12} MSE {:.5}  MAE {:.4}  R² {:.3}", report.mse, report.mae, report.r2_raw);
    }
    Ok(())
}
