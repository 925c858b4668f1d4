//! The four reported metrics on a small hand-made forecast, including the
//! night-time zeros that SMAPE treats as exact hits.
//!
//! cargo run --example metrics

use tsreprogram::metrics::evaluate_pairs;

fn main() -> tsreprogram::Result<()> {
    let truth = [0.0, 0.0, 0.12, 0.45, 0.71, 0.64, 0.30, 0.0];
    let forecast = [0.0, 0.02, 0.10, 0.50, 0.66, 0.70, 0.25, 0.0];
    let r = evaluate_pairs(&truth, &forecast)?;
    println!("n     {}", r.n);
    println!("MSE   {:.6}", r.mse);
    println!("MAE   {:.6}", r.mae);
    println!("R²    {:.6} (reported {:.6})", r.r2_raw, r.r2_reported);
    println!("SMAPE {:.3}", r.smape);

    let flat = [0.4; 8];
    let bad = evaluate_pairs(&truth, &flat)?;
    println!("constant forecast: R² raw {:.3}, reported {:.3}", bad.r2_raw, bad.r2_reported);
    Ok(())
}
