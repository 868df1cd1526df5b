//! Command implementations behind the `motgnn` binary.

pub mod commands;
pub mod config;
mod fsio;
pub mod report;

pub use fsio::write_atomic;
