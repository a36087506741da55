//! File formats, rule-directory loading and the `spiceu` command line on
//! top of `spiceu-core`.

pub mod batch;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

pub use error::{Error, Result};
