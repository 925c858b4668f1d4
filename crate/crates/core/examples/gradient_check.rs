//! Central-difference check of every trainable gradient on a toy model.
//!
//! cargo run --release --example gradient_check

use tsreprogram::dataio::{default_fixture, AuditedSplits, SplitKind};
use tsreprogram::numerics::grad_check;
use tsreprogram::trainer::{ForecastObjective, Forecaster, ModelConfig};

fn main() -> tsreprogram::Result<()> {
    let (l, h) = (48, 12);
    let (_, series) = default_fixture(5, 0)?.remove(0);
    let splits = AuditedSplits::new(series)?;
    let windows = splits.windows(SplitKind::Train, l, h, 1)?;
    let w = windows.get(288 + 108);
    let pairs = vec![(w.input.to_vec(), w.target.to_vec())];

    let model = Forecaster::new(ModelConfig::new(l, h), 0)?;
    let objective = ForecastObjective::new(&model, &pairs)?;
    let report = grad_check(&objective, 1e-5, 1e-4)?;
    for p in &report.params {
        println!("{:<28} {:>6} scalars  max rel err {:.2e}", p.name, p.scalars, p.max_rel_err);
    }
    println!("{} scalars, worst {:.2e}, passed {}", report.scalars_checked(), report.max_rel_err(), report.passed());
    Ok(())
}
