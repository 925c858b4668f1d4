//! Ingestion, cleaning, splitting and windowing of 5-minute PV power records.

mod audit;
mod csvio;
mod manifest;
mod preprocess;
mod series;
mod spline;
mod split;
mod synth;
mod windows;

pub use audit::{AuditedSplits, SplitKind};
pub use csvio::{format_timestamp, load_series, parse_timestamp, read_series, write_normalized_csv, write_power_csv, POWER_CSV_HEADER};
pub use manifest::{PlantManifest, PlantRegistry};
pub use preprocess::{fill_missing_cubic, mark_abnormal, normalize_capacity, preprocess, ABNORMAL_FACTOR};
pub use series::{TimeSeries, STEP_MINUTES, STEPS_PER_DAY};
pub use spline::NaturalCubicSpline;
pub use split::{chronological_split, SplitRanges};
pub use synth::{default_fixture, synth_plant, SynthConfig};
pub use windows::{limit_fraction, make_windows, Window, WindowSet};
