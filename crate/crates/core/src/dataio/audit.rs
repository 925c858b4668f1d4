use std::fmt;
use std::sync::{Arc, Mutex};

use super::series::TimeSeries;
use super::split::{chronological_split, SplitRanges};
use super::windows::{make_windows, WindowSet};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SplitKind {
    Train,
    Val,
    Test,
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitKind::Train => "train",
            SplitKind::Val => "val",
            SplitKind::Test => "test",
        })
    }
}

/// A cleaned series together with its chronological split.
///
/// Every request for windows is logged, so callers can prove which splits of
/// a plant were ever read (the zero-shot protocol must never touch a target
/// plant's train or validation data).
#[derive(Debug)]
pub struct AuditedSplits {
    series: TimeSeries,
    values: Arc<[f64]>,
    ranges: SplitRanges,
    log: Mutex<Vec<SplitKind>>,
}

impl AuditedSplits {
    /// Splits a gap-free series 70/20/10.
    pub fn new(series: TimeSeries) -> Result<Self> {
        Self::with_fractions(series, 0.7, 0.2, 0.1)
    }

    pub fn with_fractions(series: TimeSeries, train: f64, val: f64, test: f64) -> Result<Self> {
        if series.has_gaps() {
            return Err(Error::data(format!(
                "plant {}: series still has {} gaps",
                series.plant_id,
                series.gap_count()
            )));
        }
        let ranges = chronological_split(series.len(), train, val, test)?;
        let values: Arc<[f64]> = series.values.clone().into();
        Ok(Self {
            series,
            values,
            ranges,
            log: Mutex::new(Vec::new()),
        })
    }

    pub fn plant_id(&self) -> &str {
        &self.series.plant_id
    }

    pub fn ranges(&self) -> &SplitRanges {
        &self.ranges
    }

    /// The underlying series; reading it directly bypasses the audit, so this
    /// is only meant for timestamps and metadata.
    pub fn series(&self) -> &TimeSeries {
        &self.series
    }

    pub fn windows(&self, kind: SplitKind, input_len: usize, horizon: usize, stride: usize) -> Result<WindowSet> {
        self.log.lock().expect("audit log poisoned").push(kind);
        let bounds = match kind {
            SplitKind::Train => self.ranges.train.clone(),
            SplitKind::Val => self.ranges.val.clone(),
            SplitKind::Test => self.ranges.test.clone(),
        };
        make_windows(self.values.clone(), bounds, input_len, horizon, stride)
    }

    pub fn accesses(&self) -> Vec<SplitKind> {
        self.log.lock().expect("audit log poisoned").clone()
    }

    pub fn clear_log(&self) {
        self.log.lock().expect("audit log poisoned").clear();
    }
}
