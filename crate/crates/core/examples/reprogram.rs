//! Patches a window, embeds the patches and maps them onto text prototypes
//! with the cross-attention reprogrammer.
//!
//! cargo run --example reprogram

use tsreprogram::backbone::{Backbone, BackboneConfig};
use tsreprogram::dataio::{default_fixture, AuditedSplits, SplitKind};
use tsreprogram::numerics::seeded_rng;
use tsreprogram::patcher::{partition, window_standardize, PatchConfig, PatchEmbedder};
use tsreprogram::reprogrammer::{AttentionConfig, Reprogrammer};

fn main() -> tsreprogram::Result<()> {
    let (_, series) = default_fixture(10, 0)?.remove(1);
    let splits = AuditedSplits::new(series)?;
    let windows = splits.windows(SplitKind::Train, 48, 24, 1)?;
    let w = windows.get(288 + 108);

    let (x, norm) = window_standardize(w.input)?;
    println!("window mean {:.4}, std {:.4}", norm.mean, norm.std);

    let patch_cfg = PatchConfig::default();
    let patches = partition(&x, &patch_cfg)?;
    println!("L=48 -> {} patches of length {}", patches.count(), patch_cfg.patch_len);

    let mut rng = seeded_rng(0, 0);
    let embedder = PatchEmbedder::init(&patch_cfg, &mut rng);
    let e = embedder.embed(&patches)?;

    let backbone = Backbone::new(BackboneConfig::default())?;
    let vocab = backbone.vocab_embeddings();
    let attn = AttentionConfig::default();
    let reprogrammer = Reprogrammer::init(&attn, patch_cfg.d_model, vocab.rows(), vocab.cols(), &mut rng)?;
    let out = reprogrammer.reprogram(&e, vocab)?;
    println!("embedded {}x{} -> reprogrammed {}x{}", e.rows(), e.cols(), out.rows(), out.cols());

    for (h, a) in reprogrammer.attention_weights(&e, vocab)?.iter().enumerate() {
        let row = a.row(0);
        let (best, weight) = row.iter().enumerate().fold((0, 0.0), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
        println!("head {h}: patch 0 attends most to prototype {best} ({weight:.3}), row sum {:.12}", row.iter().sum::<f64>());
    }
    Ok(())
}
