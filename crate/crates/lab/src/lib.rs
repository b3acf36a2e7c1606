//! Experiment runner, file formats and eigensystem cache for the
//! spin-in-a-Bose-Hubbard-bath lab.

pub mod cache;
pub mod config;
pub mod output;
pub mod plot;
pub mod recipes;
pub mod runner;
pub mod session;
pub mod table;

/// Recorded in manifests and cache sidecars.
pub fn code_version() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}
