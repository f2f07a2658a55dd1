use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point with signed distance {distance:.6e} lies outside the admissible band (radius {radius:.6e})")]
    OutsideBand { distance: f64, radius: f64 },

    #[error("band half-width {d:.6e} violates d * curvature_bound <= 1/2 (curvature bound {curvature_bound:.6e}, max d {max_d:.6e})")]
    InadmissibleBand {
        d: f64,
        curvature_bound: f64,
        max_d: f64,
    },

    #[error("no background cell intersects the band")]
    EmptyBand,

    #[error("degenerate cut in cell {cell}")]
    DegenerateCut { cell: usize },

    #[error("quadrature degree {0} is not supported (max 6)")]
    UnsupportedDegree(usize),

    #[error("level set does not change sign on the cell")]
    NoIntersection,

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("point lies outside cell {cell}")]
    PointOutsideCell { cell: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("conjugate gradients did not converge: {iterations} iterations, relative residual {residual:.3e}")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("conjugate gradients broke down: matrix is not positive definite (p^T M p = {0:.3e})")]
    BreakdownNonSpd(f64),

    #[error("error norms must be positive, got {0:.3e}")]
    NonPositiveError(f64),

    #[error("discrete surface does not cross any active cell")]
    NoTraceCells,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InadmissibleBand { .. }
            | Error::Unsupported(_)
            | Error::UnsupportedDegree(_) => 2,
            Error::EmptyBand => 2,
            Error::ResourceLimit(_) => 3,
            Error::NotConverged { .. } | Error::BreakdownNonSpd(_) => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
