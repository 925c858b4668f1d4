//! Synthesizes a plant, punches gaps and a spike into it, writes and reads
//! the CSV, cleans it and splits it chronologically.
//!
//! cargo run --example data_pipeline

use tsreprogram::dataio::{
    chronological_split, preprocess, read_series, synth_plant, write_power_csv, AuditedSplits, PlantManifest,
    SplitKind, SynthConfig,
};

fn main() -> tsreprogram::Result<()> {
    let manifest = PlantManifest::new("demo", 12.0, 117.2, 32.9);
    let mut raw = synth_plant(&SynthConfig::for_plant(&manifest, 7, 14, 0.3))?;
    for i in 1000..1006 {
        raw.values[i] = f64::NAN;
    }
    raw.values[4 * 288 + 144] = 40.0;

    let mut csv = Vec::new();
    write_power_csv(&mut csv, &raw)?;
    let text = String::from_utf8_lossy(&csv);
    for line in text.lines().take(3) {
        println!("{line}");
    }

    let back = read_series(csv.as_slice(), &manifest)?;
    println!("{} rows read, {} gaps", back.len(), back.gap_count());
    let clean = preprocess(back, &manifest)?;
    println!(
        "after cleaning: {} gaps, range [{:.3}, {:.3}], spike now {:.3}",
        clean.gap_count(),
        clean.values.iter().cloned().fold(f64::INFINITY, f64::min),
        clean.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        clean.values[4 * 288 + 144]
    );

    let (a, b, c) = chronological_split(clean.len(), 0.7, 0.2, 0.1)?.lengths();
    println!("split {a}/{b}/{c}");
    let splits = AuditedSplits::new(clean)?;
    let test = splits.windows(SplitKind::Test, 48, 24, 1)?;
    println!("{} test windows; audit log {:?}", test.len(), splits.accesses());
    Ok(())
}
