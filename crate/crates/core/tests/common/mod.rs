#![allow(dead_code)]

pub mod oracles;

use nbfem::cutgeom::{CutSettings, QuadratureSpec, DEFAULT_MAX_SUBCELLS};
use nbfem::experiments::Preset;
use nbfem::fem::{assemble, build_space, FeSpace, FeSystem};
use nbfem::levelset::{BandSpec, CoefficientMode};
use nbfem::linalg::{cg_solve, cg_solve_with, CellBlocks, CgOptions, Preconditioner};
use nbfem::mesh::{interpolate_levelset, select_active_cells, BackgroundMesh, DEFAULT_MAX_CELLS};

pub struct Level<const D: usize> {
    pub space: FeSpace<D>,
    pub system: FeSystem,
    pub quad: QuadratureSpec,
    pub h: f64,
    pub d: f64,
}

/// Mesh, band, space and assembled system of one level with default
/// quadrature degrees `2r` and `2r + 2`.
pub fn level<const D: usize>(preset: &Preset<D>, gamma: f64, mode: CoefficientMode, order: usize, level: u32) -> Level<D> {
    let mesh = BackgroundMesh::build(preset.bbox, level, DEFAULT_MAX_CELLS).unwrap();
    let h = mesh.h();
    let band = BandSpec::new(&preset.surface, gamma, h).unwrap();
    let q = preset.levelset_order(order);
    let phi = interpolate_levelset(&preset.surface, q).unwrap();
    let sub_h = if q > 1 { preset.sub_h(h, q) } else { f64::INFINITY };
    let settings = CutSettings { d: band.d, sub_h, max_subcells: DEFAULT_MAX_SUBCELLS };
    let active = select_active_cells(&mesh, &phi, &settings, usize::MAX).unwrap();
    let space = build_space(active, order).unwrap();
    let quad = QuadratureSpec::new::<D>(2 * order, 2 * order + 2).unwrap();
    let system = assemble(&space, &preset.surface, mode, preset.alpha, |y| preset.f(y), &quad).unwrap();
    Level { space, system, quad, h, d: band.d }
}

/// Solve with the driver's default preconditioner for the space's order.
pub fn solve<const D: usize>(space: &FeSpace<D>, system: &FeSystem) -> Vec<f64> {
    if space.order() == 1 {
        return cg_solve(&system.matrix, &system.rhs, &CgOptions::default()).unwrap().into_result().unwrap().x;
    }
    let blocks = CellBlocks::new(&system.matrix, (0..space.num_cells()).map(|c| space.cell_dofs(c))).unwrap();
    let opts = CgOptions { preconditioner: Preconditioner::CellBlock, ..CgOptions::default() };
    cg_solve_with(&system.matrix, &system.rhs, None, &opts, Some(&blocks), |_, _| {}).unwrap().into_result().unwrap().x
}

/// Dense Cholesky; `None` if a pivot is not positive.
pub fn dense_cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut s = a[j][j];
        for k in 0..j {
            s -= l[j][k] * l[j][k];
        }
        if !(s > 0.0) {
            return None;
        }
        l[j][j] = s.sqrt();
        for i in j + 1..n {
            let mut t = a[i][j];
            for k in 0..j {
                t -= l[i][k] * l[j][k];
            }
            l[i][j] = t / l[j][j];
        }
    }
    Some(l)
}
