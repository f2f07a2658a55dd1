use rayon::prelude::*;

use super::FeSpace;
use crate::cutgeom::{cut_region, QuadratureSpec};
use crate::error::Result;
use crate::levelset::{coefficient_from, CoefficientMode, SurfaceField};
use crate::linalg::small::{self, Matrix, Vector};
use crate::linalg::SparseSym;

/// Cells whose element matrices are computed together before scattering.
const CHUNK: usize = 8192;

/// Sparse matrix and load vector of the discrete problem.
#[derive(Debug, Clone)]
pub struct FeSystem {
    pub matrix: SparseSym,
    pub rhs: Vec<f64>,
}

/// Integrand data at one volume quadrature point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointData<const D: usize> {
    /// Diffusion tensor including the `mu` factor.
    pub tensor: Matrix<D>,
    /// Coefficient of `u v`, i.e. `alpha mu`.
    pub mass: f64,
    /// Load density, i.e. `f^e mu`.
    pub load: f64,
}

/// Assemble
/// `int_{Omega_h} [(I - phi H)^-2 grad u . grad v + alpha u v] mu dx = int_{Omega_h} f^e v mu dx`
/// with `f^e(x) = f(p(x))`. The Neumann condition is natural, so no boundary
/// terms appear.
pub fn assemble<const D: usize>(
    space: &FeSpace<D>,
    surface: &SurfaceField<D>,
    mode: CoefficientMode,
    alpha: f64,
    f: impl Fn(&Vector<D>) -> f64 + Sync,
    quad: &QuadratureSpec,
) -> Result<FeSystem> {
    assemble_with(space, quad, |x| {
        let g = surface.geometry(x)?;
        let load = f(&g.closest_point(x));
        let (tensor, mu) = match mode {
            CoefficientMode::ExactHessian => {
                let c = coefficient_from(&g);
                (c.tensor, c.mu)
            }
            CoefficientMode::ZeroHessian => (small::identity(), 1.0),
        };
        Ok(PointData { tensor, mass: alpha * mu, load: load * mu })
    })
}

/// Assembly with an arbitrary pointwise integrand.
pub fn assemble_with<const D: usize>(
    space: &FeSpace<D>,
    quad: &QuadratureSpec,
    data: impl Fn(&Vector<D>) -> Result<PointData<D>> + Sync,
) -> Result<FeSystem> {
    let n = space.num_dofs();
    if n > u32::MAX as usize {
        return Err(crate::error::Error::ResourceLimit(format!("{n} degrees of freedom exceed 32-bit indexing")));
    }
    let nb = space.nodes_per_cell();
    let ncells = space.num_cells();
    let pattern = sparsity(space);
    let mut values = vec![0.0; pattern.col_indices.len()];
    let mut rhs = vec![0.0; n];

    let element = |pos: usize| -> Result<(Vec<f64>, Vec<f64>)> {
        let region = cut_region(space.active(), pos, quad)?;
        let map = space.cell_map(pos);
        let mut ke = vec![0.0; nb * nb];
        let mut fe = vec![0.0; nb];
        let mut psi = [0.0; 16];
        let mut grads = [[0.0; D]; 16];
        for qp in &region.volume_quad {
            let lambda = map.barycentric(&qp.x);
            space.shape(&map, &lambda, &mut psi, &mut grads);
            let p = data(&qp.x)?;
            let w = qp.weight;
            let wm = w * p.mass;
            // upper triangle only, mirrored below
            for j in 0..nb {
                let ag = small::scale(&small::mat_vec(&p.tensor, &grads[j]), w);
                let mj = wm * psi[j];
                for i in 0..=j {
                    ke[i * nb + j] += small::dot(&ag, &grads[i]) + mj * psi[i];
                }
                fe[j] += w * p.load * psi[j];
            }
        }
        for j in 0..nb {
            for i in j + 1..nb {
                ke[i * nb + j] = ke[j * nb + i];
            }
        }
        Ok((ke, fe))
    };

    for start in (0..ncells).step_by(CHUNK) {
        let end = (start + CHUNK).min(ncells);
        let local: Vec<Result<(Vec<f64>, Vec<f64>)>> = (start..end).into_par_iter().map(element).collect();
        // ordered scatter keeps the summation order fixed
        for (pos, res) in (start..end).zip(local) {
            let (ke, fe) = res?;
            let dofs = space.cell_dofs(pos);
            for (i, &gi) in dofs.iter().enumerate() {
                rhs[gi] += fe[i];
                let row = pattern.row_offsets[gi]..pattern.row_offsets[gi + 1];
                let cols = &pattern.col_indices[row.clone()];
                for (j, &gj) in dofs.iter().enumerate() {
                    let k = cols.binary_search(&(gj as u32)).expect("entry in sparsity pattern");
                    values[row.start + k] += ke[i * nb + j];
                }
            }
        }
    }

    let matrix = SparseSym::from_csr(n, pattern.row_offsets, pattern.col_indices, values)?;
    Ok(FeSystem { matrix, rhs })
}

struct Pattern {
    row_offsets: Vec<usize>,
    col_indices: Vec<u32>,
}

fn sparsity<const D: usize>(space: &FeSpace<D>) -> Pattern {
    let n = space.num_dofs();
    let ncells = space.num_cells();
    // dof -> cells
    let mut counts = vec![0usize; n + 1];
    for pos in 0..ncells {
        for &g in space.cell_dofs(pos) {
            counts[g + 1] += 1;
        }
    }
    for i in 0..n {
        counts[i + 1] += counts[i];
    }
    let mut fill = counts.clone();
    let mut cells = vec![0usize; counts[n]];
    for pos in 0..ncells {
        for &g in space.cell_dofs(pos) {
            cells[fill[g]] = pos;
            fill[g] += 1;
        }
    }
    let rows: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cols: Vec<u32> = cells[counts[i]..counts[i + 1]]
                .iter()
                .flat_map(|&pos| space.cell_dofs(pos).iter().map(|&g| g as u32))
                .collect();
            cols.sort_unstable();
            cols.dedup();
            cols
        })
        .collect();
    let mut row_offsets = Vec::with_capacity(n + 1);
    row_offsets.push(0);
    let mut col_indices = Vec::new();
    for r in rows {
        col_indices.extend(r);
        row_offsets.push(col_indices.len());
    }
    Pattern { row_offsets, col_indices }
}
