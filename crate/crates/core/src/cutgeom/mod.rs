//! Cut-cell geometry: the part of each active cell inside the band
//! `{ |phi_h| < d }`, its volume quadrature, and quadrature on the discrete
//! surface `{ phi_h = 0 }`.
//!
//! Linear `phi_h` is clipped exactly. For quadratic and cubic `phi_h` (2D)
//! the cell is refined into sub-triangles on which `phi_h` is replaced by its
//! linear interpolant; the clipped sub-triangles then play the role of the
//! linear case.

pub mod clip;
mod subdivide;

use serde::{Deserialize, Serialize};

pub use clip::{clip_band, simplex_measure, zero_level_pieces, Simplex, ValuedSimplex};
pub use subdivide::{adaptive_leaves, subtriangulate, LeafTarget, SubTriangulation};

use crate::error::{Error, Result};
use crate::fem::basis::SimplexMap;
use crate::linalg::small::{self, Vector};
use crate::mesh::{ActiveMesh, BackgroundMesh, CellClass, DiscreteLevelSet};
use crate::quadrature::{segment_rule, SimplexRule};

/// Default cap on sub-cells generated for a single background cell.
pub const DEFAULT_MAX_SUBCELLS: usize = 1 << 22;

/// Geometry parameters shared by selection and quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutSettings {
    /// Band half-width.
    pub d: f64,
    /// Target sub-cell size for curved `phi_h`; ignored for linear `phi_h`.
    pub sub_h: f64,
    pub max_subcells: usize,
}

impl CutSettings {
    pub fn linear(d: f64) -> Self {
        Self { d, sub_h: f64::INFINITY, max_subcells: DEFAULT_MAX_SUBCELLS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumePoint<const D: usize> {
    pub x: Vector<D>,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint<const D: usize> {
    pub x: Vector<D>,
    pub weight: f64,
    /// Unit normal of the discrete surface, from `grad phi_h`.
    pub normal: Vector<D>,
}

/// Clipped geometry and quadrature of one active cell.
#[derive(Debug, Clone)]
pub struct CutRegion<const D: usize> {
    pub cell: usize,
    pub class: CellClass,
    pub sub_simplices: Vec<Simplex<D>>,
    pub volume_quad: Vec<VolumePoint<D>>,
    pub trace_quad: Vec<TracePoint<D>>,
}

impl<const D: usize> CutRegion<D> {
    pub fn volume(&self) -> f64 {
        self.volume_quad.iter().map(|q| q.weight).sum()
    }

    pub fn trace_measure(&self) -> f64 {
        self.trace_quad.iter().map(|q| q.weight).sum()
    }
}

/// Sub-simplices covering `{ x in T : -d < phi_h(x) < d }` for linear
/// `phi_h` given by its vertex values. A cell inside the band is returned
/// unchanged.
pub fn clip_cell<const D: usize>(cell: usize, points: &[Vector<D>], values: &[f64], d: f64) -> Result<Vec<Simplex<D>>> {
    let s = ValuedSimplex::new(points, values);
    let pieces = clip_band(&s, d);
    let measure: f64 = pieces.iter().map(|p| simplex_measure(&p.vertices)).sum();
    if pieces.is_empty() || measure == 0.0 {
        return Err(Error::DegenerateCut { cell });
    }
    Ok(pieces.into_iter().map(|p| p.vertices).collect())
}

/// Map `rule` onto every sub-simplex.
pub fn volume_quadrature<const D: usize>(sub_simplices: &[Simplex<D>], rule: &SimplexRule) -> Vec<VolumePoint<D>> {
    let mut out = Vec::with_capacity(sub_simplices.len() * rule.len());
    append_volume_points(sub_simplices, rule, &mut out);
    out
}

fn append_volume_points<const D: usize>(sub_simplices: &[Simplex<D>], rule: &SimplexRule, out: &mut Vec<VolumePoint<D>>) {
    for s in sub_simplices {
        let vol = simplex_measure(s);
        if vol == 0.0 {
            continue;
        }
        for (lambda, w) in rule.iter() {
            let x = std::array::from_fn(|i| (0..=D).map(|m| lambda[m] * s[m][i]).sum());
            out.push(VolumePoint { x, weight: w * vol });
        }
    }
}

/// Quadrature of the requested degree on `{ phi_h = 0 }` within a simplex
/// carrying linear `phi_h`.
pub fn trace_quadrature<const D: usize>(points: &[Vector<D>], values: &[f64], degree: usize) -> Result<Vec<TracePoint<D>>> {
    let s = ValuedSimplex::new(points, values);
    let mut out = Vec::new();
    append_trace_points(&s, &TraceRule::new::<D>(degree)?, &mut out);
    if out.is_empty() {
        return Err(Error::NoIntersection);
    }
    Ok(out)
}

/// Rule used on the pieces of the discrete surface.
#[derive(Debug, Clone)]
enum TraceRule {
    Segment(Vec<f64>, Vec<f64>),
    Triangle(SimplexRule),
}

impl TraceRule {
    fn new<const D: usize>(degree: usize) -> Result<Self> {
        Ok(if D == 2 {
            let (x, w) = segment_rule(degree);
            TraceRule::Segment(x, w)
        } else {
            TraceRule::Triangle(SimplexRule::new(2, degree)?)
        })
    }
}

fn linear_gradient<const D: usize>(s: &ValuedSimplex<D>) -> Option<Vector<D>> {
    let map = SimplexMap::new(&s.vertices[..=D])?;
    let grads = map.lambda_gradients();
    Some(std::array::from_fn(|i| (0..=D).map(|m| s.values[m] * grads[m][i]).sum()))
}

fn append_trace_points<const D: usize>(s: &ValuedSimplex<D>, rule: &TraceRule, out: &mut Vec<TracePoint<D>>) {
    let pieces = zero_level_pieces(s);
    if pieces.is_empty() {
        return;
    }
    let Some(grad) = linear_gradient(s) else { return };
    let gn = small::norm(&grad);
    if gn == 0.0 {
        return;
    }
    let normal = small::scale(&grad, 1.0 / gn);
    for piece in pieces {
        match rule {
            TraceRule::Segment(x, w) => {
                let len = small::norm(&small::sub(&piece[1], &piece[0]));
                for (t, wt) in x.iter().zip(w) {
                    out.push(TracePoint { x: small::lerp(&piece[0], &piece[1], *t), weight: wt * len, normal });
                }
            }
            TraceRule::Triangle(rule) => {
                let a = small::sub(&piece[1], &piece[0]);
                let b = small::sub(&piece[2], &piece[0]);
                let c = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
                let area = 0.5 * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
                for (lambda, wt) in rule.iter() {
                    let x = std::array::from_fn(|i| (0..3).map(|m| lambda[m] * piece[m][i]).sum());
                    out.push(TracePoint { x, weight: wt * area, normal });
                }
            }
        }
    }
}

/// Everything needed to integrate over one active cell.
#[derive(Debug, Clone)]
pub struct QuadratureSpec {
    volume: SimplexRule,
    trace: TraceRule,
}

impl QuadratureSpec {
    pub fn new<const D: usize>(volume_degree: usize, trace_degree: usize) -> Result<Self> {
        Ok(Self { volume: SimplexRule::new(D, volume_degree)?, trace: TraceRule::new::<D>(trace_degree)? })
    }
}

/// Build the clipped region and both quadratures for the active cell at
/// position `pos`.
pub fn cut_region<const D: usize>(active: &ActiveMesh<D>, pos: usize, spec: &QuadratureSpec) -> Result<CutRegion<D>> {
    let cell = active.active_cells[pos];
    let class = active.cell_class[pos];
    let mesh = &active.mesh;
    let d = active.settings.d;
    let points = mesh.cell_points(cell);
    let values = active.phi_h.node_values(mesh, cell, d);

    let mut trace_quad = Vec::new();
    let sub_simplices = if active.phi_h.order() == 1 {
        let s = ValuedSimplex::new(&points, &values);
        append_trace_points(&s, &spec.trace, &mut trace_quad);
        match class {
            CellClass::FullyInsideBand => vec![s.vertices],
            CellClass::Cut => clip_cell(cell, &points, &values, d)?,
        }
    } else {
        let leaves = adaptive_leaves(mesh, &active.phi_h, &active.settings, cell, &values, LeafTarget::Band)?;
        let mut subs = Vec::new();
        for leaf in &leaves {
            subs.extend(clip_band(leaf, d).into_iter().map(|p| p.vertices));
        }
        let zero = adaptive_leaves(mesh, &active.phi_h, &active.settings, cell, &values, LeafTarget::Surface)?;
        for leaf in &zero {
            append_trace_points(leaf, &spec.trace, &mut trace_quad);
        }
        subs
    };
    let volume_quad = volume_quadrature(&sub_simplices, &spec.volume);
    Ok(CutRegion { cell, class, sub_simplices, volume_quad, trace_quad })
}

/// Activity test for curved `phi_h`, decided on the piecewise-linear
/// surrogate.
pub fn classify_curved<const D: usize>(
    mesh: &BackgroundMesh<D>,
    phi_h: &DiscreteLevelSet<D>,
    settings: &CutSettings,
    cell: usize,
    values: &[f64],
) -> Option<CellClass> {
    let margin = subdivide::margin(phi_h, mesh.h() * (D as f64).sqrt());
    let d = settings.d;
    if values[..=D].iter().all(|v| v.abs() < d - margin) {
        return Some(CellClass::FullyInsideBand);
    }
    let leaves = adaptive_leaves(mesh, phi_h, settings, cell, values, LeafTarget::Band).ok()?;
    let measure: f64 = leaves
        .iter()
        .flat_map(|l| clip_band(l, d))
        .map(|p| simplex_measure(&p.vertices))
        .sum();
    (measure > 0.0).then_some(CellClass::Cut)
}
