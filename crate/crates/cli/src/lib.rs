//! Pipeline driver around the exact-arithmetic library: parse a JSON
//! configuration in which every number is exact, run the requested mode
//! (validate, build, certify, or enumerate), and emit a canonical JSON
//! certificate report plus a one-line summary.
//!
//! All state lives in the configuration file; the binary's flags only pick
//! the file and override a few fields. Identical configurations produce
//! byte-identical reports.

pub mod config;
pub mod pipeline;

pub use config::{parse_config, ConfigError, ConfigIssue, Mode, PipelineConfig};
pub use pipeline::{run_pipeline, PipelineOutcome};
