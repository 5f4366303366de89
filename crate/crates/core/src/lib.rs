pub mod analyze;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod hiv;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod vbg;

pub use error::{Error, Result};
