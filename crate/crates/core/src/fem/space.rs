use rayon::prelude::*;

use super::basis::{LagrangeSimplex, SimplexMap};
use crate::error::{Error, Result};
use crate::linalg::small::Vector;
use crate::mesh::ActiveMesh;

/// Barycentric slack when deciding whether a point belongs to a cell.
const INSIDE_TOL: f64 = 1e-10;

/// `C^0` Lagrange space of order `r` over the active cells.
#[derive(Debug, Clone)]
pub struct FeSpace<const D: usize> {
    active: ActiveMesh<D>,
    element: LagrangeSimplex<D>,
    /// `nodes_per_cell` dofs per active cell, in element node order.
    cell_dofs: Vec<usize>,
    /// Node positions on the lattice of spacing `h / r`.
    dof_keys: Vec<[i64; D]>,
}

/// Number the Lagrange nodes of the active cells.
///
/// Nodes are identified by their position on the lattice of spacing `h / r`,
/// so shared nodes coincide exactly. Global numbers follow the lattice order
/// (last coordinate slowest), independent of cell traversal.
pub fn build_space<const D: usize>(active: ActiveMesh<D>, order: usize) -> Result<FeSpace<D>> {
    if !(1..=3).contains(&order) {
        return Err(Error::Unsupported(format!("element order {order}")));
    }
    if D == 3 && order > 1 {
        return Err(Error::Unsupported("elements of order > 1 are available in 2D only".into()));
    }
    let element = LagrangeSimplex::<D>::new(order);
    let mesh = &active.mesh;
    let local_keys = |cell: usize| -> Vec<[i64; D]> {
        let grid = mesh.cell_grid(cell);
        element
            .nodes()
            .iter()
            .map(|a| std::array::from_fn(|k| (0..=D).map(|m| a[m] as i64 * grid[m][k] as i64).sum()))
            .collect()
    };
    let per_cell: Vec<Vec<[i64; D]>> = active.active_cells.par_iter().map(|&c| local_keys(c)).collect();

    let lattice_order = |a: &[i64; D], b: &[i64; D]| a.iter().rev().cmp(b.iter().rev());
    let mut dof_keys: Vec<[i64; D]> = per_cell.iter().flatten().copied().collect();
    dof_keys.par_sort_unstable_by(lattice_order);
    dof_keys.dedup();

    let cell_dofs: Vec<usize> = per_cell
        .par_iter()
        .flat_map_iter(|keys| {
            keys.iter()
                .map(|k| dof_keys.binary_search_by(|probe| lattice_order(probe, k)).expect("node key registered"))
                .collect::<Vec<_>>()
        })
        .collect();

    Ok(FeSpace { active, element, cell_dofs, dof_keys })
}

impl<const D: usize> FeSpace<D> {
    pub fn active(&self) -> &ActiveMesh<D> {
        &self.active
    }

    pub fn element(&self) -> &LagrangeSimplex<D> {
        &self.element
    }

    pub fn order(&self) -> usize {
        self.element.order()
    }

    pub fn num_dofs(&self) -> usize {
        self.dof_keys.len()
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.element.num_nodes()
    }

    pub fn num_cells(&self) -> usize {
        self.active.active_cells.len()
    }

    /// Global dofs of the active cell at position `pos`.
    pub fn cell_dofs(&self, pos: usize) -> &[usize] {
        let n = self.nodes_per_cell();
        &self.cell_dofs[pos * n..(pos + 1) * n]
    }

    pub fn dof_coordinate(&self, dof: usize) -> Vector<D> {
        let key = &self.dof_keys[dof];
        let mesh = &self.active.mesh;
        let step = mesh.h() / self.order() as f64;
        std::array::from_fn(|k| mesh.bbox().lo[k] + key[k] as f64 * step)
    }

    pub fn dof_coordinates(&self) -> Vec<Vector<D>> {
        (0..self.num_dofs()).map(|i| self.dof_coordinate(i)).collect()
    }

    pub fn cell_map(&self, pos: usize) -> SimplexMap<D> {
        self.active.mesh.cell_map(self.active.active_cells[pos])
    }

    /// Nodal interpolant of `g`.
    pub fn interpolate(&self, g: impl Fn(&Vector<D>) -> f64 + Sync) -> Vec<f64> {
        (0..self.num_dofs()).into_par_iter().map(|i| g(&self.dof_coordinate(i))).collect()
    }

    /// Value and gradient of shape functions at barycentric point `lambda`.
    pub(crate) fn shape(&self, map: &SimplexMap<D>, lambda: &[f64; 4], values: &mut [f64], grads: &mut [Vector<D>]) {
        let n = self.nodes_per_cell();
        let lg = map.lambda_gradients();
        if self.order() == 1 {
            values[..n].copy_from_slice(&lambda[..n]);
            grads[..n].copy_from_slice(&lg[..n]);
            return;
        }
        let mut dl = [[0.0; 4]; 16];
        self.element.values_and_lambda_gradients(lambda, &mut values[..n], &mut dl[..n]);
        for k in 0..n {
            let mut g = [0.0; D];
            for m in 0..=D {
                for (gi, li) in g.iter_mut().zip(&lg[m]) {
                    *gi += dl[k][m] * li;
                }
            }
            grads[k] = g;
        }
    }

    /// Position of an active cell containing `x`.
    pub fn locate(&self, x: &Vector<D>) -> Option<usize> {
        let mesh = &self.active.mesh;
        mesh.cells_around(x, 1e-9).into_iter().find_map(|cell| {
            let pos = self.active.position(cell)?;
            let lambda = mesh.cell_map(cell).barycentric(x);
            lambda[..=D].iter().all(|&l| l >= -INSIDE_TOL).then_some(pos)
        })
    }

    /// Interpolate the function `coefficients` of this space at the nodes of
    /// `target`. Nodes outside the active cells get zero.
    pub fn transfer(&self, coefficients: &[f64], target: &FeSpace<D>) -> Vec<f64> {
        (0..target.num_dofs())
            .into_par_iter()
            .map(|i| {
                let x = target.dof_coordinate(i);
                self.locate(&x).map_or(0.0, |pos| {
                    let map = self.cell_map(pos);
                    self.evaluate_local(coefficients, pos, &map, &map.barycentric(&x)).0
                })
            })
            .collect()
    }

    /// Value and gradient of the finite element function `coefficients` at
    /// `x` in the active cell at position `pos`.
    pub fn evaluate(&self, coefficients: &[f64], pos: usize, x: &Vector<D>) -> Result<(f64, Vector<D>)> {
        let map = self.cell_map(pos);
        let lambda = map.barycentric(x);
        if lambda[..=D].iter().any(|&l| l < -INSIDE_TOL) {
            return Err(Error::PointOutsideCell { cell: self.active.active_cells[pos] });
        }
        Ok(self.evaluate_local(coefficients, pos, &map, &lambda))
    }

    pub(crate) fn evaluate_local(&self, coefficients: &[f64], pos: usize, map: &SimplexMap<D>, lambda: &[f64; 4]) -> (f64, Vector<D>) {
        let mut vals = [0.0; 16];
        let mut grads = [[0.0; D]; 16];
        self.shape(map, lambda, &mut vals, &mut grads);
        let mut value = 0.0;
        let mut grad = [0.0; D];
        for (k, &dof) in self.cell_dofs(pos).iter().enumerate() {
            let c = coefficients[dof];
            value += c * vals[k];
            for i in 0..D {
                grad[i] += c * grads[k][i];
            }
        }
        (value, grad)
    }
}
