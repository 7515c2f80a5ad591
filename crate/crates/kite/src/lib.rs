//! File formats, run configuration, the scoring pipeline and the `kite`
//! command-line tool, on top of [`kite_core`].
//!
//! | module | contents |
//! |---|---|
//! | [`format`] | binary and CSV feature files |
//! | [`manifest`] | model manifests, target lists, ground-truth tables |
//! | [`config`] | [`RunConfig`](config::RunConfig) |
//! | [`runner`] | probe, random features, PCA, scoring |
//! | [`eval`] | benchmark evaluation and ranking |
//! | [`synth_io`] | synthetic benchmarks on disk |
//! | [`cli`] | argument parsing and commands |

#![forbid(unsafe_code)]

pub mod cli;
pub mod config;
mod error;
pub mod eval;
pub mod format;
pub mod manifest;
pub mod runner;
pub mod synth_io;

pub use error::{exit, Error, Result};
pub use kite_core;

/// Version string embedded in every report.
pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));
