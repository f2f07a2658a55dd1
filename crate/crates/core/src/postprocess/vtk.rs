use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::FeSpace;

/// Unstructured grid in legacy VTK form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VtkGrid {
    pub points: Vec<[f64; 3]>,
    /// Point indices per cell; all cells are simplices of one dimension.
    pub cells: Vec<Vec<usize>>,
    pub point_data: Vec<(String, Vec<f64>)>,
    pub cell_data: Vec<(String, Vec<i32>)>,
}

fn cell_type(nodes: usize) -> u8 {
    match nodes {
        3 => 5,
        4 => 10,
        _ => 7,
    }
}

/// Write `grid` as a legacy ASCII VTK file.
pub fn write_vtk(path: &Path, title: &str, grid: &VtkGrid) -> Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    write_grid(&mut w, title, grid).and_then(|_| w.flush()).map_err(io)
}

fn write_grid(w: &mut impl Write, title: &str, grid: &VtkGrid) -> std::io::Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.replace('\n', " "))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", grid.points.len())?;
    for p in &grid.points {
        writeln!(w, "{:.17e} {:.17e} {:.17e}", p[0], p[1], p[2])?;
    }
    let size: usize = grid.cells.iter().map(|c| c.len() + 1).sum();
    writeln!(w, "CELLS {} {}", grid.cells.len(), size)?;
    for c in &grid.cells {
        write!(w, "{}", c.len())?;
        for i in c {
            write!(w, " {i}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "CELL_TYPES {}", grid.cells.len())?;
    for c in &grid.cells {
        writeln!(w, "{}", cell_type(c.len()))?;
    }
    if !grid.point_data.is_empty() {
        writeln!(w, "POINT_DATA {}", grid.points.len())?;
        for (name, values) in &grid.point_data {
            writeln!(w, "SCALARS {name} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in values {
                writeln!(w, "{v:.17e}")?;
            }
        }
    }
    if !grid.cell_data.is_empty() {
        writeln!(w, "CELL_DATA {}", grid.cells.len())?;
        for (name, values) in &grid.cell_data {
            writeln!(w, "SCALARS {name} int 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in values {
                writeln!(w, "{v}")?;
            }
        }
    }
    Ok(())
}

/// Grid of the active cells with point fields `u_h`, `phi` and the cell
/// field `class` (0 inside the band, 1 cut).
pub fn vtk_grid<const D: usize>(space: &FeSpace<D>, coefficients: &[f64]) -> Result<VtkGrid> {
    if coefficients.len() != space.num_dofs() {
        return Err(Error::DimensionMismatch { expected: space.num_dofs(), got: coefficients.len() });
    }
    let active = space.active();
    let mesh = &active.mesh;
    let mut index = BTreeMap::new();
    for &cell in &active.active_cells {
        for v in mesh.cell_vertices(cell) {
            index.insert(v, 0usize);
        }
    }
    for (k, slot) in index.values_mut().enumerate() {
        *slot = k;
    }
    let mut points = Vec::with_capacity(index.len());
    let mut phi = Vec::with_capacity(index.len());
    for &v in index.keys() {
        let x = mesh.vertex(v);
        let mut p = [0.0; 3];
        p[..D].copy_from_slice(&x);
        points.push(p);
        phi.push(active.phi_h.surface().signed_distance(&x));
    }
    let mut uh = vec![0.0; points.len()];
    let mut cells = Vec::with_capacity(active.len());
    for (pos, &cell) in active.active_cells.iter().enumerate() {
        let map = space.cell_map(pos);
        let verts = mesh.cell_vertices(cell);
        let mut local = Vec::with_capacity(D + 1);
        for (m, v) in verts.iter().enumerate() {
            let k = index[v];
            let mut lambda = [0.0; 4];
            lambda[m] = 1.0;
            uh[k] = space.evaluate_local(coefficients, pos, &map, &lambda).0;
            local.push(k);
        }
        cells.push(local);
    }
    let class = active.cell_class.iter().map(|c| c.code()).collect();
    Ok(VtkGrid {
        points,
        cells,
        point_data: vec![("u_h".into(), uh), ("phi".into(), phi)],
        cell_data: vec![("class".into(), class)],
    })
}

/// Write the active mesh and solution to `path`.
pub fn export_vtk<const D: usize>(space: &FeSpace<D>, coefficients: &[f64], path: &Path) -> Result<()> {
    let grid = vtk_grid(space, coefficients)?;
    write_vtk(path, "nbfem narrow-band solution", &grid)
}
