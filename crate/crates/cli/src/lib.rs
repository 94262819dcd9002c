//! Batch front end for `metricord`: configuration, the analysis pipeline
//! behind each subcommand, report writers and SVG plots.

pub mod config;
pub mod error;
pub mod inputs;
pub mod output;
pub mod pipeline;
pub mod plot;

pub use config::{AnalysisConfig, Method, MetricSpec, Scheme};
pub use error::{CliError, Result};
