use std::ops::Range;
use std::sync::Arc;

use crate::error::{Error, Result};

/// One supervised pair, borrowed from its [`WindowSet`].
#[derive(Clone, Copy, Debug)]
pub struct Window<'a> {
    pub input: &'a [f64],
    pub target: &'a [f64],
    /// Absolute index of the first input point in the source series.
    pub origin: usize,
}

/// Ordered (input, target) windows carved from one segment of a series.
///
/// Windows are stored as origins into a shared value buffer; every window
/// lies entirely inside `bounds`.
#[derive(Clone, Debug)]
pub struct WindowSet {
    values: Arc<[f64]>,
    bounds: Range<usize>,
    input_len: usize,
    horizon: usize,
    origins: Vec<usize>,
}

/// Windows of `input_len + horizon` points over `values[bounds]`, starting every
/// `stride` points. Count = ⌊(N − L − H)/stride⌋ + 1.
pub fn make_windows(
    values: Arc<[f64]>,
    bounds: Range<usize>,
    input_len: usize,
    horizon: usize,
    stride: usize,
) -> Result<WindowSet> {
    if input_len == 0 || horizon == 0 || stride == 0 {
        return Err(Error::config("input length, horizon and stride must be >= 1"));
    }
    if bounds.end > values.len() || bounds.start > bounds.end {
        return Err(Error::shape(format!(
            "segment {bounds:?} outside series of length {}",
            values.len()
        )));
    }
    let n = bounds.len();
    let span = input_len + horizon;
    if span > n {
        return Err(Error::data(format!(
            "empty window set: segment has {n} points, windows need {span}"
        )));
    }
    let count = (n - span) / stride + 1;
    let origins = (0..count).map(|i| bounds.start + i * stride).collect();
    Ok(WindowSet {
        values,
        bounds,
        input_len,
        horizon,
        origins,
    })
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn bounds(&self) -> Range<usize> {
        self.bounds.clone()
    }

    pub fn origins(&self) -> &[usize] {
        &self.origins
    }

    pub fn get(&self, i: usize) -> Window<'_> {
        let o = self.origins[i];
        Window {
            input: &self.values[o..o + self.input_len],
            target: &self.values[o + self.input_len..o + self.input_len + self.horizon],
            origin: o,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Window<'_>> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    /// Absolute index range touched by any window.
    pub fn span(&self) -> Option<Range<usize>> {
        let first = *self.origins.first()?;
        let last = *self.origins.last()?;
        Some(first..last + self.input_len + self.horizon)
    }

    /// Keeps the first `n` windows.
    pub fn prefix(&self, n: usize) -> WindowSet {
        WindowSet {
            origins: self.origins[..n.min(self.len())].to_vec(),
            ..self.clone()
        }
    }

    /// The windows at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> WindowSet {
        WindowSet {
            origins: indices.iter().map(|&i| self.origins[i]).collect(),
            ..self.clone()
        }
    }
}

/// Keeps the chronological prefix of ⌈p·count⌉ windows.
pub fn limit_fraction(windows: &WindowSet, p: f64) -> Result<WindowSet> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::config(format!("fraction {p} outside (0, 1]")));
    }
    // Epsilon guards products such as 0.05·100 = 5.000000000000001.
    let keep = ((p * windows.len() as f64) - 1e-9).ceil().max(0.0) as usize;
    Ok(windows.prefix(keep))
}
