//! Pinned outputs. Set `TSRP_UPDATE_GOLDEN=1` to rewrite the fixtures after
//! an intentional change.

use std::path::PathBuf;

use tsreprogram::backbone::{Backbone, BackboneConfig};
use tsreprogram::dataio::{default_fixture, AuditedSplits, SplitKind};
use tsreprogram::promptgen::{render_prompt, series_stats, tokenize, PromptTemplate, SYNTHETIC_CONTEXT};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn check_golden(name: &str, actual: &str) {
    let path = fixture(name);
    if std::env::var_os("TSRP_UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "golden file {name} differs");
}

#[test]
fn prompt_for_a_fixture_window() {
    let (_, series) = default_fixture(60, 0).unwrap().remove(0);
    let splits = AuditedSplits::new(series).unwrap();
    let windows = splits.windows(SplitKind::Test, 48, 24, 1).unwrap();
    // 08:00 on the first full test day.
    let w = windows.get(288 - 24 + 96);
    let stats = series_stats(w.input).unwrap();
    let prompt = render_prompt(&PromptTemplate::default(), SYNTHETIC_CONTEXT, Some(24), Some(48), &stats).unwrap();
    check_golden("prompt_l48_h24.txt", &prompt.text);
    assert!(prompt.shared_len < prompt.text.len());
    assert_eq!(tokenize(&prompt.text).len(), prompt.text.len());
}

#[test]
fn backbone_fingerprint() {
    let backbone = Backbone::new(BackboneConfig::default()).unwrap();
    let tokens = tokenize("Dataset description: PV output.");
    let x = backbone.embed_tokens(&tokens).unwrap();
    let y = backbone.forward(&x).unwrap();
    let last = y.row(y.rows() - 1);
    let text = format!(
        "weights {}\nlast_row {}\n",
        backbone.weights_hash(),
        last.iter().map(|v| format!("{v:.12e}")).collect::<Vec<_>>().join(" ")
    );
    check_golden("backbone_fingerprint.txt", &text);
}
