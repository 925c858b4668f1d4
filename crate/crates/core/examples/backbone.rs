//! Runs the frozen causal backbone over a tokenized prompt and checks that
//! continuing from a cached prefix matches a single full pass.
//!
//! cargo run --example backbone

use tsreprogram::backbone::{Backbone, BackboneConfig, PrefixState};
use tsreprogram::numerics::{Matrix, Tape};
use tsreprogram::promptgen::tokenize;

fn main() -> tsreprogram::Result<()> {
    let backbone = Backbone::new(BackboneConfig::default())?;
    let cfg = backbone.config();
    println!(
        "{} layers, d_llm {}, {} heads, vocab {}, max_seq {}",
        cfg.layers, cfg.d_llm, cfg.heads, cfg.vocab, cfg.max_seq
    );
    println!("weights {}", backbone.weights_hash());

    let tokens = tokenize("Dataset description: PV output. Input statistics follow.");
    let x = backbone.embed_tokens(&tokens)?;
    let full = backbone.forward(&x)?;

    // Encode the first 20 rows once, then feed the rest against that prefix.
    let split = 20;
    let head = Matrix::from_rows(&(0..split).map(|i| x.row(i).to_vec()).collect::<Vec<_>>())?;
    let tail = Matrix::from_rows(&(split..x.rows()).map(|i| x.row(i).to_vec()).collect::<Vec<_>>())?;
    let prefix = backbone.extend_prefix(&PrefixState::empty(), &head)?;
    let mut tape = Tape::new();
    let tv = tape.constant(&tail);
    let out = backbone.forward_suffix(&mut tape, &prefix, tv)?;
    let out = tape.value(out);

    let mut worst: f64 = 0.0;
    for i in 0..out.rows() {
        for (a, b) in out.row(i).iter().zip(full.row(split + i)) {
            worst = worst.max((a - b).abs());
        }
    }
    println!("{} tokens, prefix of {}, max deviation from full pass {worst:.2e}", tokens.len(), prefix.len());
    Ok(())
}
