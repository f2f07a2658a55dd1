//! Narrow-band unfitted finite elements for Laplace–Beltrami problems.
//!
//! The surface equation `-Δ_Γ u + α u = f` is extended constantly along
//! normals to a band `{ |φ| < d }` and discretised with Lagrange elements
//! on the cells of a regular background mesh that meet the band.

pub mod cutgeom;
pub mod error;
pub mod fem;
pub mod levelset;
pub mod linalg;
pub mod mesh;
pub mod quadrature;

pub use error::{Error, Result};
pub mod experiments;
pub mod postprocess;
pub mod cli;
