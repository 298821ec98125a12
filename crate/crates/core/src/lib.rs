//! Two-stage autoencoder (TSAE) anomaly detection for multivariate time series.
//!
//! This crate is `no_std` and needs only `alloc`. It contains the numerical
//! pieces of the pipeline:
//!
//! - [`nn`]: a small dense sigmoid network with exact backpropagation and Adam.
//! - [`preprocess`]: min-max scaling fitted on training data, column exclusion,
//!   anti-aliased decimation, sliding windows and the train/validation split.
//! - [`tsae`]: the two-stage model. `AE1` reconstructs a whole window (the
//!   slow, globally correlated component), `AE2` reconstructs the residual at
//!   the last instant (the fast, locally correlated component).
//! - [`baseline`]: single autoencoders scored per window (AE-w) or per instant (AE-i).
//! - [`eval`]: point-adjusted precision/recall/F1 and the best-F1 threshold sweep.
//! - [`synth`]: a seeded generator of plant-like signals with injected anomalies.
//!
//! File formats, CSV ingestion and the command line live in the `tsae` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baseline;
pub mod error;
pub mod eval;
pub mod filter;
pub mod linalg;
pub mod nn;
pub mod preprocess;
pub mod stats;
pub mod synth;
pub mod train;
pub mod tsae;

pub use error::{Error, Result};
pub use linalg::Matrix;
