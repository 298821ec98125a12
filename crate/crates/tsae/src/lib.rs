//! File formats, experiment configuration, pipelines and the `tsae` command
//! line on top of [`tsae_core`].

pub mod bundle;
pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod pipeline;

pub use error::{Error, Result};
pub use tsae_core as core;
