//! Configuration, stage orchestration and report emission for the `sevi`
//! command-line tool.

// Negated comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod manifest;
pub mod output;
pub mod pipeline;
pub mod report;
pub mod robustness;
pub mod runner;

pub use config::PipelineConfig;
pub use manifest::Manifest;
pub use runner::{Runner, StageError, StageResult};
