//! Command-line front end and report IO for `pfpini-core`.
//!
//! The binary is a thin wrapper over [`cli::run`], which returns the rendered
//! report and an exit code so that tests can drive every command in-process.

pub mod cli;
pub mod exec;
pub mod render;

pub use exec::Threaded;
