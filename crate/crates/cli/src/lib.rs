//! Configuration loading, experiment orchestration and CSV/SVG output for
//! `trajopt-core`. The `trajopt` binary is a thin wrapper over [`commands`].

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod reference;
pub mod setup;
pub mod svg;

pub use error::CliError;
