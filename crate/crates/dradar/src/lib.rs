//! Std companion of `dradar-core`: scenario files, measurement and image
//! formats, threaded and TCP node runtimes, and the command implementations
//! behind the `dradar` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod metrics;
pub mod runtime;

pub use config::ScenarioConfig;
pub use error::{CliError, CliResult};
