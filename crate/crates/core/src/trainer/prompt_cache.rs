use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::backbone::{Backbone, PrefixState};
use crate::error::Result;
use crate::promptgen::{tokenize, PromptBundle};

const DEFAULT_CAPACITY: usize = 4096;

#[derive(Default)]
struct Cache {
    shared: HashMap<String, PrefixState>,
    windows: HashMap<String, PrefixState>,
}

/// Turns rendered prompts into backbone prefix states.
///
/// Prompt rows never depend on trainable parameters, so their states can be
/// reused across windows with the same prompt text, across epochs and across
/// models sharing a backbone. The part of the prompt before the first
/// statistic is shared by every window and processed once.
pub struct PromptEncoder {
    backbone: Arc<Backbone>,
    capacity: usize,
    cache: Mutex<Cache>,
}

impl PromptEncoder {
    pub fn new(backbone: Arc<Backbone>) -> Self {
        Self::with_capacity(backbone, DEFAULT_CAPACITY)
    }

    /// At most `capacity` per-window states are kept; later prompts are
    /// recomputed on every use.
    pub fn with_capacity(backbone: Arc<Backbone>, capacity: usize) -> Self {
        PromptEncoder {
            backbone,
            capacity,
            cache: Mutex::new(Cache::default()),
        }
    }

    pub fn backbone(&self) -> &Arc<Backbone> {
        &self.backbone
    }

    pub fn cached_windows(&self) -> usize {
        self.cache.lock().expect("prompt cache poisoned").windows.len()
    }

    pub fn encode(&self, prompt: &PromptBundle) -> Result<PrefixState> {
        let shared_text = &prompt.text[..prompt.shared_len];
        let mut cache = self.cache.lock().expect("prompt cache poisoned");
        if let Some(state) = cache.windows.get(&prompt.text) {
            return Ok(state.clone());
        }
        let shared = match cache.shared.get(shared_text) {
            Some(s) => s.clone(),
            None => {
                let rows = self.backbone.embed_tokens(&tokenize(shared_text))?;
                let s = self.backbone.extend_prefix(&PrefixState::empty(), &rows)?;
                cache.shared.insert(shared_text.to_string(), s.clone());
                s
            }
        };
        let rest = &prompt.text[prompt.shared_len..];
        let state = if rest.is_empty() {
            shared
        } else {
            let rows = self.backbone.embed_tokens(&tokenize(rest))?;
            self.backbone.extend_prefix(&shared, &rows)?
        };
        if cache.windows.len() < self.capacity {
            cache.windows.insert(prompt.text.clone(), state.clone());
        }
        Ok(state)
    }
}
