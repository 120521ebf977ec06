#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Experiment runner: figures, verification suites, CSV/JSON/SVG output.

pub mod commands;
pub mod config;
pub mod output;
pub mod suite;
pub mod summary;
pub mod svg;

pub use commands::{execute, RunError};
pub use config::{resolve_out_dir, Command, ConfigError, ExperimentConfig, OUT_ENV};
pub use summary::{Check, Summary};
