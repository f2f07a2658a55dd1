//! Structured simplicial background meshes and the active cell set.
//!
//! The background mesh is never stored explicitly: vertices and cells are
//! generated from grid indices on demand, so fine levels only cost memory for
//! the cells near the surface.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutgeom::{self, CutSettings};
use crate::error::{Error, Result};
use crate::fem::basis::{LagrangeSimplex, SimplexMap};
use crate::levelset::SurfaceField;
use crate::linalg::small::{self, Vector};

/// Cubes per axis in one pre-filter tile.
const TILE: usize = 8;

/// Default cap on the number of background cells.
pub const DEFAULT_MAX_CELLS: u64 = 1 << 40;

/// Grid-corner offsets of the local simplices of one square (two triangles
/// split along the lower-left to upper-right diagonal).
const TRIANGLES: [[[usize; 2]; 3]; 2] = [[[0, 0], [1, 0], [1, 1]], [[0, 0], [1, 1], [0, 1]]];

/// Kuhn subdivision of the unit cube: for each axis permutation walk from
/// (0,0,0) to (1,1,1). Odd permutations have their last two vertices swapped
/// so that every tetrahedron is positively oriented.
const TETRAHEDRA: [[[usize; 3]; 4]; 6] = [
    [[0, 0, 0], [1, 0, 0], [1, 1, 0], [1, 1, 1]],
    [[0, 0, 0], [1, 0, 0], [1, 1, 1], [1, 0, 1]],
    [[0, 0, 0], [0, 1, 0], [1, 1, 1], [1, 1, 0]],
    [[0, 0, 0], [0, 1, 0], [0, 1, 1], [1, 1, 1]],
    [[0, 0, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1]],
    [[0, 0, 0], [0, 0, 1], [1, 1, 1], [0, 1, 1]],
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox<const D: usize> {
    #[serde(with = "serde_arrays")]
    pub lo: [f64; D],
    #[serde(with = "serde_arrays")]
    pub hi: [f64; D],
}

mod serde_arrays {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, const D: usize>(a: &[f64; D], s: S) -> Result<S::Ok, S::Error> {
        a.as_slice().serialize(s)
    }

    pub fn deserialize<'de, De: Deserializer<'de>, const D: usize>(d: De) -> Result<[f64; D], De::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        v.try_into().map_err(|_| serde::de::Error::custom(format!("expected {D} coordinates")))
    }
}

impl<const D: usize> BoundingBox<D> {
    /// The cube `(-a, a)^D`.
    pub fn symmetric(a: f64) -> Self {
        Self { lo: [-a; D], hi: [a; D] }
    }
}

/// Mesh size law: `h = 2^-l 0.1` in 2D and `h = 2^(1-l) 0.1` in 3D.
pub fn h_law(dim: usize, level: u32) -> f64 {
    let base = if dim == 3 { 0.2 } else { 0.1 };
    base / f64::from(1u32 << level)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundMesh<const D: usize> {
    bbox: BoundingBox<D>,
    level: u32,
    h: f64,
    cubes: [usize; D],
}

impl<const D: usize> BackgroundMesh<D> {
    /// Uniform mesh of `bbox` with the spacing prescribed by [`h_law`].
    pub fn build(bbox: BoundingBox<D>, level: u32, max_cells: u64) -> Result<Self> {
        Self::with_spacing(bbox, level, h_law(D, level), max_cells)
    }

    pub fn with_spacing(bbox: BoundingBox<D>, level: u32, h: f64, max_cells: u64) -> Result<Self> {
        if !(D == 2 || D == 3) {
            return Err(Error::Unsupported(format!("background meshes in dimension {D}")));
        }
        let mut cubes = [0usize; D];
        for k in 0..D {
            let len = bbox.hi[k] - bbox.lo[k];
            let n = (len / h).round();
            if !(len > 0.0) || n < 1.0 || ((n * h - len).abs() > 1e-9 * len) {
                return Err(Error::Config(format!(
                    "box edge {len} is not divisible into cells of size {h}"
                )));
            }
            cubes[k] = n as usize;
        }
        let total = cubes.iter().map(|&n| n as u64).product::<u64>() * Self::simplices_per_cube() as u64;
        if total > max_cells {
            return Err(Error::ResourceLimit(format!("{total} background cells exceed the cap of {max_cells}")));
        }
        Ok(Self { bbox, level, h, cubes })
    }

    pub const fn simplices_per_cube() -> usize {
        if D == 2 {
            2
        } else {
            6
        }
    }

    pub fn bbox(&self) -> &BoundingBox<D> {
        &self.bbox
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Grid spacing, the mesh parameter of the level law.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Longest simplex edge (the cube diagonal).
    pub fn max_edge(&self) -> f64 {
        self.h * (D as f64).sqrt()
    }

    pub fn cubes_per_axis(&self) -> [usize; D] {
        self.cubes
    }

    pub fn num_cubes(&self) -> usize {
        self.cubes.iter().product()
    }

    pub fn num_cells(&self) -> usize {
        self.num_cubes() * Self::simplices_per_cube()
    }

    pub fn num_vertices(&self) -> usize {
        self.cubes.iter().map(|n| n + 1).product()
    }

    pub fn vertex_index(&self, grid: &[usize; D]) -> usize {
        let mut idx = 0;
        for k in (0..D).rev() {
            idx = idx * (self.cubes[k] + 1) + grid[k];
        }
        idx
    }

    pub fn vertex_grid(&self, mut idx: usize) -> [usize; D] {
        std::array::from_fn(|k| {
            let n = self.cubes[k] + 1;
            let g = idx % n;
            idx /= n;
            g
        })
    }

    pub fn grid_point(&self, grid: &[usize; D]) -> Vector<D> {
        std::array::from_fn(|k| self.bbox.lo[k] + grid[k] as f64 * self.h)
    }

    pub fn vertex(&self, idx: usize) -> Vector<D> {
        self.grid_point(&self.vertex_grid(idx))
    }

    fn cube_grid(&self, mut cube: usize) -> [usize; D] {
        std::array::from_fn(|k| {
            let g = cube % self.cubes[k];
            cube /= self.cubes[k];
            g
        })
    }

    fn cube_index(&self, grid: &[usize; D]) -> usize {
        let mut idx = 0;
        for k in (0..D).rev() {
            idx = idx * self.cubes[k] + grid[k];
        }
        idx
    }

    /// Cells of the cube that contains `x`, or `None` outside the box.
    pub fn cells_near(&self, x: &Vector<D>) -> Option<std::ops::Range<usize>> {
        let mut g = [0usize; D];
        for k in 0..D {
            let t = (x[k] - self.bbox.lo[k]) / self.h;
            if !(t >= 0.0 && t <= self.cubes[k] as f64) {
                return None;
            }
            g[k] = (t.floor() as usize).min(self.cubes[k] - 1);
        }
        let spc = Self::simplices_per_cube();
        let first = self.cube_index(&g) * spc;
        Some(first..first + spc)
    }

    /// Cells of every cube whose closure, widened by `tol * h`, contains
    /// `x`. Points on cube faces belong to several cubes.
    pub fn cells_around(&self, x: &Vector<D>, tol: f64) -> Vec<usize> {
        let mut ranges: [(usize, usize); 3] = [(0, 0); 3];
        for k in 0..D {
            let t = (x[k] - self.bbox.lo[k]) / self.h;
            let n = self.cubes[k] as f64;
            if !(t >= -tol && t <= n + tol) {
                return Vec::new();
            }
            let lo = (t - tol).floor().clamp(0.0, n - 1.0) as usize;
            let hi = (t + tol).floor().clamp(0.0, n - 1.0) as usize;
            ranges[k] = (lo, hi);
        }
        let spc = Self::simplices_per_cube();
        let mut out = Vec::new();
        let mut g = [0usize; D];
        let mut visit = |g: &[usize; D]| {
            let first = self.cube_index(g) * spc;
            out.extend(first..first + spc);
        };
        match D {
            2 => {
                for a in ranges[0].0..=ranges[0].1 {
                    for b in ranges[1].0..=ranges[1].1 {
                        g[0] = a;
                        g[1] = b;
                        visit(&g);
                    }
                }
            }
            _ => {
                for a in ranges[0].0..=ranges[0].1 {
                    for b in ranges[1].0..=ranges[1].1 {
                        for c in ranges[2].0..=ranges[2].1 {
                            g[0] = a;
                            g[1] = b;
                            g[2] = c;
                            visit(&g);
                        }
                    }
                }
            }
        }
        out
    }

    /// Grid coordinates of the `D + 1` vertices of `cell`.
    pub fn cell_grid(&self, cell: usize) -> [[usize; D]; 4] {
        let spc = Self::simplices_per_cube();
        let base = self.cube_grid(cell / spc);
        let local = cell % spc;
        let mut out = [[0usize; D]; 4];
        for (v, o) in out.iter_mut().enumerate().take(D + 1) {
            for k in 0..D {
                let off = if D == 2 { TRIANGLES[local][v][k] } else { TETRAHEDRA[local][v][k] };
                o[k] = base[k] + off;
            }
        }
        out
    }

    pub fn cell_vertices(&self, cell: usize) -> Vec<usize> {
        self.cell_grid(cell)[..=D].iter().map(|g| self.vertex_index(g)).collect()
    }

    pub fn cell_points(&self, cell: usize) -> Vec<Vector<D>> {
        self.cell_grid(cell)[..=D].iter().map(|g| self.grid_point(g)).collect()
    }

    pub fn cell_map(&self, cell: usize) -> SimplexMap<D> {
        SimplexMap::new(&self.cell_points(cell)).expect("background cells are non-degenerate")
    }

    /// All vertex coordinates. Only sensible for coarse meshes.
    pub fn vertices(&self) -> impl Iterator<Item = Vector<D>> + '_ {
        (0..self.num_vertices()).map(|i| self.vertex(i))
    }

    /// All cell connectivities. Only sensible for coarse meshes.
    pub fn cells(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.num_cells()).map(|c| self.cell_vertices(c))
    }

    /// `diam / inradius` of one cell; every cell is congruent to it.
    pub fn shape_regularity(&self) -> f64 {
        let pts = self.cell_points(0);
        let vol = self.cell_map(0).volume().abs();
        let mut diam = 0.0f64;
        for i in 0..=D {
            for j in i + 1..=D {
                diam = diam.max(small::norm(&small::sub(&pts[i], &pts[j])));
            }
        }
        // inradius = D vol / total facet measure
        let mut facets = 0.0;
        for skip in 0..=D {
            let f: Vec<Vector<D>> = (0..=D).filter(|&i| i != skip).map(|i| pts[i]).collect();
            facets += facet_measure(&f);
        }
        let inradius = D as f64 * vol / facets;
        diam / (2.0 * inradius)
    }
}

fn facet_measure<const D: usize>(f: &[Vector<D>]) -> f64 {
    if D == 2 {
        small::norm(&small::sub(&f[1], &f[0]))
    } else {
        let a = small::sub(&f[1], &f[0]);
        let b = small::sub(&f[2], &f[0]);
        let c = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
        0.5 * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
    }
}

/// Values within `1e-12 d` of `0` or `+-d` are moved off that level by
/// `1e-12 d`, so that no cut passes through a node, not even up to roundoff.
/// Ties at `+-d` move out of the band: a cell that only touches the band
/// boundary at a node then stays inactive instead of carrying a sliver.
pub fn tie_break(value: f64, d: f64) -> f64 {
    let eps = 1e-12 * d;
    for (level, dir) in [(0.0, 1.0), (d, 1.0), (-d, -1.0)] {
        if (value - level).abs() <= eps {
            return level + dir * eps;
        }
    }
    value
}

/// Nodal Lagrange interpolant `I_h phi` of order `q` on the background mesh.
#[derive(Debug, Clone)]
pub struct DiscreteLevelSet<const D: usize> {
    surface: SurfaceField<D>,
    element: LagrangeSimplex<D>,
}

/// Build the interpolant of the exact distance of order `q_int`.
pub fn interpolate_levelset<const D: usize>(surface: &SurfaceField<D>, q_int: usize) -> Result<DiscreteLevelSet<D>> {
    if !(1..=3).contains(&q_int) {
        return Err(Error::Unsupported(format!("level-set interpolation order {q_int}")));
    }
    if D == 3 && q_int > 1 {
        return Err(Error::Unsupported("higher-order level sets are available in 2D only".into()));
    }
    Ok(DiscreteLevelSet { surface: *surface, element: LagrangeSimplex::new(q_int) })
}

impl<const D: usize> DiscreteLevelSet<D> {
    pub fn order(&self) -> usize {
        self.element.order()
    }

    pub fn surface(&self) -> &SurfaceField<D> {
        &self.surface
    }

    pub fn element(&self) -> &LagrangeSimplex<D> {
        &self.element
    }

    /// Values at the Lagrange nodes of `cell`, tie-broken against `d`.
    pub fn node_values(&self, mesh: &BackgroundMesh<D>, cell: usize, d: f64) -> Vec<f64> {
        let pts = mesh.cell_points(cell);
        self.element
            .node_points(&pts)
            .iter()
            .map(|x| tie_break(self.surface.signed_distance(x), d))
            .collect()
    }

    /// Value of the interpolant at a barycentric point of `cell` given its
    /// node values.
    pub fn eval_local(&self, node_values: &[f64], lambda: &[f64; 4]) -> f64 {
        let mut psi = [0.0; 16];
        self.element.values(lambda, &mut psi);
        node_values.iter().zip(psi.iter()).map(|(v, p)| v * p).sum()
    }

    pub fn eval(&self, mesh: &BackgroundMesh<D>, cell: usize, x: &Vector<D>, d: f64) -> f64 {
        let lambda = mesh.cell_map(cell).barycentric(x);
        self.eval_local(&self.node_values(mesh, cell, d), &lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellClass {
    FullyInsideBand,
    Cut,
}

impl CellClass {
    pub fn code(self) -> i32 {
        match self {
            CellClass::FullyInsideBand => 0,
            CellClass::Cut => 1,
        }
    }
}

/// Cells of the background mesh that intersect the discrete band.
#[derive(Debug, Clone)]
pub struct ActiveMesh<const D: usize> {
    pub mesh: BackgroundMesh<D>,
    pub phi_h: DiscreteLevelSet<D>,
    pub settings: CutSettings,
    /// Sorted background cell indices.
    pub active_cells: Vec<usize>,
    pub cell_class: Vec<CellClass>,
}

impl<const D: usize> ActiveMesh<D> {
    pub fn len(&self) -> usize {
        self.active_cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active_cells.is_empty()
    }

    pub fn d(&self) -> f64 {
        self.settings.d
    }

    /// Position of a background cell in the active list.
    pub fn position(&self, cell: usize) -> Option<usize> {
        self.active_cells.binary_search(&cell).ok()
    }
}

/// Classification of a single P1 cell from its vertex values.
pub fn classify_linear(values: &[f64], d: f64) -> Option<CellClass> {
    let has_neg = values.iter().any(|&v| v < 0.0);
    let has_pos = values.iter().any(|&v| v > 0.0);
    let min_abs = if has_neg && has_pos {
        0.0
    } else {
        values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    };
    if min_abs >= d {
        return None;
    }
    if values.iter().all(|v| v.abs() < d) {
        Some(CellClass::FullyInsideBand)
    } else {
        Some(CellClass::Cut)
    }
}

/// Select the cells that meet `{ |phi_h| < d }`.
///
/// Only cubes whose centre lies within `d + 2h` (plus the cube radius) of
/// the surface are inspected. The result is sorted by cell index.
pub fn select_active_cells<const D: usize>(
    mesh: &BackgroundMesh<D>,
    phi_h: &DiscreteLevelSet<D>,
    settings: &CutSettings,
    max_active: usize,
) -> Result<ActiveMesh<D>> {
    let d = settings.d;
    let slab = d + 2.0 * mesh.h();
    let surface = phi_h.surface();
    let spc = BackgroundMesh::<D>::simplices_per_cube();
    let tiles: [usize; D] = std::array::from_fn(|k| mesh.cubes[k].div_ceil(TILE));
    let num_tiles: usize = tiles.iter().product();
    let cube_radius = 0.5 * mesh.max_edge();

    let found: Vec<Vec<(usize, CellClass)>> = (0..num_tiles)
        .into_par_iter()
        .map(|t| {
            let mut rest = t;
            let tile: [usize; D] = std::array::from_fn(|k| {
                let g = rest % tiles[k];
                rest /= tiles[k];
                g
            });
            let lo: [usize; D] = std::array::from_fn(|k| tile[k] * TILE);
            let hi: [usize; D] = std::array::from_fn(|k| ((tile[k] + 1) * TILE).min(mesh.cubes[k]));
            let centre: Vector<D> =
                std::array::from_fn(|k| mesh.bbox.lo[k] + 0.5 * (lo[k] + hi[k]) as f64 * mesh.h);
            let radius = 0.5 * mesh.h * (0..D).map(|k| ((hi[k] - lo[k]) as f64).powi(2)).sum::<f64>().sqrt();
            let mut out = Vec::new();
            if surface.signed_distance(&centre).abs() > slab + radius {
                return out;
            }
            let mut g = lo;
            loop {
                let cc: Vector<D> = std::array::from_fn(|k| mesh.bbox.lo[k] + (g[k] as f64 + 0.5) * mesh.h);
                if surface.signed_distance(&cc).abs() <= slab + cube_radius {
                    let cube = mesh.cube_index(&g);
                    for local in 0..spc {
                        let cell = cube * spc + local;
                        if let Some(class) = classify_cell(mesh, phi_h, settings, cell) {
                            out.push((cell, class));
                        }
                    }
                }
                // odometer over the tile
                let mut k = 0;
                loop {
                    if k == D {
                        return out;
                    }
                    g[k] += 1;
                    if g[k] < hi[k] {
                        break;
                    }
                    g[k] = lo[k];
                    k += 1;
                }
            }
        })
        .collect();

    let mut cells: Vec<(usize, CellClass)> = found.into_iter().flatten().collect();
    cells.sort_unstable_by_key(|&(c, _)| c);
    if cells.is_empty() {
        return Err(Error::EmptyBand);
    }
    if cells.len() > max_active {
        return Err(Error::ResourceLimit(format!("{} active cells exceed the cap of {max_active}", cells.len())));
    }
    let (active_cells, cell_class) = cells.into_iter().unzip();
    Ok(ActiveMesh { mesh: *mesh, phi_h: phi_h.clone(), settings: *settings, active_cells, cell_class })
}

fn classify_cell<const D: usize>(
    mesh: &BackgroundMesh<D>,
    phi_h: &DiscreteLevelSet<D>,
    settings: &CutSettings,
    cell: usize,
) -> Option<CellClass> {
    let values = phi_h.node_values(mesh, cell, settings.d);
    if phi_h.order() == 1 {
        classify_linear(&values, settings.d)
    } else {
        cutgeom::classify_curved(mesh, phi_h, settings, cell, &values)
    }
}
