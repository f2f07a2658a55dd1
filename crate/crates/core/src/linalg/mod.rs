//! Linear algebra: small dense helpers, compressed-row symmetric storage and
//! preconditioned conjugate gradients.

mod blocks;
mod cg;
pub mod small;
mod sparse;

pub use cg::{cg_solve, cg_solve_from, cg_solve_monitored, cg_solve_with, default_max_iter, CgOptions, CgOutcome, Preconditioner, SolveStats};
pub use blocks::CellBlocks;
pub use sparse::SparseSym;
