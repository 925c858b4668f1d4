use chrono::{Duration, NaiveDateTime};

pub const STEP_MINUTES: i64 = 5;
pub const STEPS_PER_DAY: usize = 288;

/// Uniformly spaced univariate power record for one plant.
///
/// Slot `i` sits at `start + 5·i` minutes. Slots flagged in `missing` hold
/// `NaN` until a fill pass replaces them.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub plant_id: String,
    pub start: NaiveDateTime,
    pub values: Vec<f64>,
    pub missing: Vec<bool>,
    /// Installed capacity the values were divided by, once normalized.
    pub normalized_by: Option<f64>,
}

impl TimeSeries {
    pub fn new(plant_id: impl Into<String>, start: NaiveDateTime, values: Vec<f64>) -> Self {
        let missing = values.iter().map(|v| !v.is_finite()).collect();
        Self {
            plant_id: plant_id.into(),
            start,
            values,
            missing,
            normalized_by: None,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, index: usize) -> NaiveDateTime {
        self.start + Duration::minutes(STEP_MINUTES * index as i64)
    }

    pub fn gap_count(&self) -> usize {
        self.missing.iter().filter(|m| **m).count()
    }

    pub fn gaps(&self) -> Vec<usize> {
        self.missing
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.then_some(i))
            .collect()
    }

    pub fn has_gaps(&self) -> bool {
        self.missing.iter().any(|m| *m)
    }
}
