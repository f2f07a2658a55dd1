//! Error norms, convergence tables and VTK output.

mod errors;
mod report;
mod vtk;

pub use errors::{band_h1_error, compute_eoc, error_norms, integrate_errors, surface_errors, ErrorNorms, Integrals, Parts};
pub use report::{ConvergenceReport, LevelRow, CSV_HEADER};
pub use vtk::{export_vtk, vtk_grid, write_vtk, VtkGrid};
