//! Numerics for the discrete tacnode kernel and the densities of blue tiles
//! between two cuts of a hexagon.
//!
//! The crate is layered bottom-up: scalar special functions, contour
//! quadrature, the Θ integrals and their coefficient tables, the kernel in
//! two independent forms, interlacing-cone volumes, and finally the
//! one- and two-level densities with their cross-checks.

pub mod contours;
pub mod densities;
pub mod error;
pub mod interlace_polytope;
pub mod linalg;
pub mod special_functions;
pub mod tacnode_kernel;
pub mod theta_integrals;

pub use error::{Error, Result};
pub use num_complex::Complex64;
