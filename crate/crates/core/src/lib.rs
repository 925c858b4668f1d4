pub mod backbone;
pub mod baselines;
pub mod checkpoint;
pub mod dataio;
pub mod harness;
pub mod error;
pub mod metrics;
pub mod numerics;
pub mod patcher;
pub mod projector;
pub mod promptgen;
pub mod reprogrammer;
pub mod trainer;

pub use error::{Error, Result};
