//! Finite hexagons with two opposite cuts, their lozenge tilings and the
//! comparison of sampled blue tiles with the limiting densities.

pub mod error;
pub mod geometry;
pub mod tiling_sim;

pub use error::{Result, TilingError};
