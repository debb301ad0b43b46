//! Hourly ICU acuity scoring.
//!
//! The pipeline ingests timestamped bedside events, resamples them to an
//! hourly grid, scores SOFA over a trailing 24-hour window and trains a GRU
//! with causal self-attention that emits a mortality probability every
//! hour, along with the attention matrix that explains it.

pub mod binio;
pub mod cli;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod model;
pub mod numerics;
pub mod sofa;
pub mod synth;
pub mod variables;

pub use error::{Error, Result};
pub use variables::{OrganSystem, Variable, VariableSpecs};
