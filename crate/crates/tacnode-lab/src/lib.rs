//! Batch front end: grid evaluation of the kernel and densities, volume
//! oracles, verification suites and tiling simulations, all written as
//! provenance-stamped CSV and JSON.

pub mod commands;
pub mod config;
pub mod error;
pub mod provenance;
pub mod suites;

pub use error::{LabError, Result};
