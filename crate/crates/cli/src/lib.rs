//! Command implementations behind the `postmortem` binary. Kept as a
//! library so integration tests can drive commands and the review server
//! in-process.

pub mod commands;
pub mod config;
pub mod datasets;
pub mod failure;
pub mod server;

pub use config::PipelineConfig;
pub use failure::Failure;
