//! Continuous Lagrange spaces on the active mesh and assembly of the
//! narrow-band system.

mod assembly;
pub mod basis;
mod space;

pub use assembly::{assemble, assemble_with, FeSystem, PointData};
pub use space::{build_space, FeSpace};
