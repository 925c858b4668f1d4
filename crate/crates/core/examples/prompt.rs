//! Renders the statistics prompt for one input window and shows the lag
//! ranking behind it.
//!
//! cargo run --example prompt

use tsreprogram::dataio::{default_fixture, AuditedSplits, SplitKind};
use tsreprogram::promptgen::{render_prompt, series_stats, tokenize, top_lags, PromptTemplate, SYNTHETIC_CONTEXT};

fn main() -> tsreprogram::Result<()> {
    let (manifest, series) = default_fixture(30, 0)?.remove(0);
    let splits = AuditedSplits::new(series)?;
    let windows = splits.windows(SplitKind::Train, 96, 48, 1)?;
    // Noon on day 3.
    let w = windows.get(3 * 288 + 144 - 96);

    let ranking = top_lags(w.input, 5)?;
    println!("plant {} ({} MW)", manifest.plant_id, manifest.capacity_mw);
    println!("top lags {:?}", ranking.lags);

    let stats = series_stats(w.input)?;
    let prompt = render_prompt(&PromptTemplate::default(), SYNTHETIC_CONTEXT, Some(48), Some(96), &stats)?;
    println!("{} bytes, {} shared by every window, {} tokens\n", prompt.text.len(), prompt.shared_len, tokenize(&prompt.text).len());
    println!("{}", prompt.text);
    Ok(())
}
