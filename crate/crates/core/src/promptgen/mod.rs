//! Prompt-as-prefix: spectral lags, window statistics, the prompt template
//! and the byte-level tokenizer.

mod lags;
mod spectrum;
mod stats;
mod template;
mod tokenizer;

pub use lags::{top_lags, LagRanking, LAG_COUNT, LAG_RESOLUTION};
pub use spectrum::{dft, Spectrum};
pub use stats::{series_stats, PromptStats, Trend};
pub use template::{render_prompt, PromptBundle, PromptTemplate, DEFAULT_TEMPLATE, REFERENCE_CONTEXT, SYNTHETIC_CONTEXT};
pub use tokenizer::{detokenize, tokenize, VOCAB_SIZE};
