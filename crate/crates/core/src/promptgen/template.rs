use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::stats::PromptStats;
use super::tokenizer::tokenize;
use crate::error::{Error, Result};

pub const DEFAULT_TEMPLATE: &str = "<Context>\n\
Below is the information about the input time series:\n\
[Instruction]: forecast the next <Horizon> steps given the previous <Input Size> steps information;\n\
[Statistics]: The input has a minimum of <min_val>, a maximum of <max_val>, and a median of <median_val>. \
The overall trend is <upward or downward>. The top five lags are <lag_val>.";

/// Full description of the 2006 California plants. It is long enough that
/// it only fits next to L = 336 patches with `max_seq` raised above 512.
pub const REFERENCE_CONTEXT: &str = "The distributed photovoltaic dataset includes output power \
measurements from distributed photovoltaic systems located in California, USA. It includes only \
photovoltaic power data and spans the entire year of 2006. Furthermore, the data exhibits a periodic \
pattern with no power generation during nighttime and early morning hours.";

/// Shorter context used by default so the prompt fits the toy backbone.
pub const SYNTHETIC_CONTEXT: &str = "The distributed photovoltaic dataset includes 5-minute \
capacity-normalized output power of distributed photovoltaic systems, with no generation at night.";

/// Placeholders whose values change from window to window.
const WINDOW_FIELDS: [&str; 5] = ["min_val", "max_val", "median_val", "upward or downward", "lag_val"];

/// A prompt template with `<Name>` placeholders.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PromptTemplate {
    text: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            text: DEFAULT_TEMPLATE.to_string(),
        }
    }
}

/// Rendered prompt plus where its window-dependent part begins.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptBundle {
    pub text: String,
    /// Byte offset of the first window-statistic value. Everything before it
    /// depends only on the context, horizon and input length.
    pub shared_len: usize,
}

impl PromptBundle {
    pub fn tokens(&self) -> Vec<usize> {
        tokenize(&self.text)
    }

    pub fn shared_tokens(&self) -> Vec<usize> {
        tokenize(&self.text[..self.shared_len])
    }

    pub fn window_tokens(&self) -> Vec<usize> {
        tokenize(&self.text[self.shared_len..])
    }
}

impl PromptTemplate {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let t = PromptTemplate { text: text.into() };
        t.placeholders()?;
        Ok(t)
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Placeholder names in order of appearance.
    pub fn placeholders(&self) -> Result<Vec<&str>> {
        let mut out = Vec::new();
        let mut rest = self.text.as_str();
        while let Some(open) = rest.find('<') {
            let after = &rest[open + 1..];
            let close = after
                .find('>')
                .ok_or_else(|| Error::config("unterminated '<' in prompt template"))?;
            out.push(&after[..close]);
            rest = &after[close + 1..];
        }
        Ok(out)
    }

    /// Substitutes every placeholder; a name without a value is a config error.
    pub fn render(&self, values: &BTreeMap<&str, String>) -> Result<PromptBundle> {
        let mut text = String::with_capacity(self.text.len() + 64);
        let mut shared_len = None;
        let mut rest = self.text.as_str();
        while let Some(open) = rest.find('<') {
            text.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            let close = after
                .find('>')
                .ok_or_else(|| Error::config("unterminated '<' in prompt template"))?;
            let name = &after[..close];
            let value = values
                .get(name)
                .ok_or_else(|| Error::config(format!("prompt placeholder <{name}> has no value")))?;
            if shared_len.is_none() && WINDOW_FIELDS.contains(&name) {
                shared_len = Some(text.len());
            }
            text.push_str(value);
            rest = &after[close + 1..];
        }
        text.push_str(rest);
        let shared_len = shared_len.unwrap_or(text.len());
        Ok(PromptBundle { text, shared_len })
    }
}

fn fmt_value(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

/// Renders `template` for one window. `None` for the horizon or input length
/// leaves the placeholder unfilled, which is reported as a config error.
pub fn render_prompt(
    template: &PromptTemplate,
    dataset_context: &str,
    horizon: Option<usize>,
    input_len: Option<usize>,
    stats: &PromptStats,
) -> Result<PromptBundle> {
    let mut values: BTreeMap<&str, String> = BTreeMap::new();
    values.insert("Context", dataset_context.to_string());
    if let Some(h) = horizon {
        values.insert("Horizon", h.to_string());
    }
    if let Some(l) = input_len {
        values.insert("Input Size", l.to_string());
    }
    values.insert("min_val", fmt_value(stats.min_val));
    values.insert("max_val", fmt_value(stats.max_val));
    values.insert("median_val", fmt_value(stats.median_val));
    values.insert("upward or downward", stats.trend.word().to_string());
    let lags: Vec<String> = stats.top_lags.iter().map(|l| l.to_string()).collect();
    values.insert("lag_val", lags.join(", "));
    template.render(&values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::promptgen::Trend;

    fn stats() -> PromptStats {
        PromptStats {
            min_val: 0.0,
            max_val: 0.8123,
            median_val: -0.00001,
            trend: Trend::Downward,
            top_lags: vec![12, 24, 1, 11, 13],
            lags_degenerate: false,
        }
    }

    #[test]
    fn substitutes_everything() {
        let p = render_prompt(&PromptTemplate::default(), "ctx", Some(24), Some(48), &stats()).unwrap();
        assert!(p.text.starts_with("ctx\nBelow"));
        assert!(p.text.contains("forecast the next 24 steps given the previous 48 steps"));
        assert!(p.text.contains("a maximum of 0.812, and a median of 0.000."));
        assert!(p.text.contains("trend is downward. The top five lags are 12, 24, 1, 11, 13."));
        assert!(p.text[p.shared_len..].starts_with("0.000, a maximum"));
        assert!(!p.text.contains('<'));
    }

    #[test]
    fn missing_horizon() {
        let err = render_prompt(&PromptTemplate::default(), "ctx", None, Some(48), &stats()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn unterminated_placeholder() {
        assert!(PromptTemplate::new("a <b").is_err());
        assert_eq!(PromptTemplate::new("<x> and <y>").unwrap().placeholders().unwrap(), vec!["x", "y"]);
    }
}
