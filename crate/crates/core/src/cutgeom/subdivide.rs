//! Local refinement of cells carrying a curved `phi_h`.

use super::clip::ValuedSimplex;
use super::CutSettings;
use crate::error::{Error, Result};
use crate::linalg::small::Vector;
use crate::mesh::{tie_break, BackgroundMesh, DiscreteLevelSet};

/// Regular refinement of one cell with the interpolant sampled at the
/// sub-cell vertices.
#[derive(Debug, Clone)]
pub struct SubTriangulation<const D: usize> {
    pub cell: usize,
    pub sub_h: f64,
    /// Sub-cells per cell edge.
    pub factor: usize,
    pub leaves: Vec<ValuedSimplex<D>>,
}

/// Bound on how far `phi_h` can stray from its linear interpolant on a
/// sub-cell of diameter `diam`.
pub(super) fn margin<const D: usize>(phi_h: &DiscreteLevelSet<D>, diam: f64) -> f64 {
    2.0 * phi_h.surface().curvature_bound() * diam * diam
}

/// Refinement factor so that sub-cell edges along the grid are `<= sub_h`.
fn refinement_factor(h: f64, sub_h: f64) -> usize {
    ((h / sub_h) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Uniform refinement of a triangle into `k^2` similar sub-triangles,
/// `k = ceil(h / sub_h)`.
pub fn subtriangulate<const D: usize>(
    mesh: &BackgroundMesh<D>,
    phi_h: &DiscreteLevelSet<D>,
    cell: usize,
    sub_h: f64,
    d: f64,
    max_subcells: usize,
) -> Result<SubTriangulation<D>> {
    if D != 2 {
        return Err(Error::Unsupported("sub-triangulation is implemented for triangles only".into()));
    }
    if !(sub_h > 0.0) {
        return Err(Error::Config(format!("sub-cell size must be positive, got {sub_h}")));
    }
    let k = refinement_factor(mesh.h(), sub_h);
    if k * k > max_subcells {
        return Err(Error::ResourceLimit(format!("{} sub-cells exceed the per-cell cap of {max_subcells}", k * k)));
    }
    let pts = mesh.cell_points(cell);
    let nodes = phi_h.node_values(mesh, cell, d);
    let sample = |i: usize, j: usize| -> (Vector<D>, f64) {
        let l1 = i as f64 / k as f64;
        let l2 = j as f64 / k as f64;
        let lambda = [1.0 - l1 - l2, l1, l2, 0.0];
        let x = std::array::from_fn(|c| (0..3).map(|m| lambda[m] * pts[m][c]).sum());
        (x, tie_break(phi_h.eval_local(&nodes, &lambda), d))
    };
    let mut leaves = Vec::with_capacity(k * k);
    let mut push = |a: (Vector<D>, f64), b: (Vector<D>, f64), c: (Vector<D>, f64)| {
        leaves.push(ValuedSimplex::new(&[a.0, b.0, c.0], &[a.1, b.1, c.1]));
    };
    for j in 0..k {
        for i in 0..k - j {
            push(sample(i, j), sample(i + 1, j), sample(i, j + 1));
            if i + j + 2 <= k {
                push(sample(i + 1, j), sample(i + 1, j + 1), sample(i, j + 1));
            }
        }
    }
    Ok(SubTriangulation { cell, sub_h, factor: k, leaves })
}

/// Which level sets a refinement has to resolve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafTarget {
    /// The band boundary `|phi_h| = d`.
    Band,
    /// The discrete surface `phi_h = 0`.
    Surface,
}

/// Hierarchical version of [`subtriangulate`]: a sub-triangle is split only
/// while the target level sets may cross it, down to the size of the uniform
/// refinement. Sub-triangles that are provably inside (`Band`) are kept
/// whole; provably irrelevant ones are dropped. Clipping the returned leaves
/// gives the same region as clipping the uniform refinement.
pub fn adaptive_leaves<const D: usize>(
    mesh: &BackgroundMesh<D>,
    phi_h: &DiscreteLevelSet<D>,
    settings: &CutSettings,
    cell: usize,
    node_values: &[f64],
    target: LeafTarget,
) -> Result<Vec<ValuedSimplex<D>>> {
    if D != 2 {
        return Err(Error::Unsupported("sub-triangulation is implemented for triangles only".into()));
    }
    let k = refinement_factor(mesh.h(), settings.sub_h);
    let max_depth = (k as f64).log2().ceil() as u32;
    let d = settings.d;
    let pts = mesh.cell_points(cell);
    let diam0 = mesh.h() * (D as f64).sqrt();

    struct Node {
        lambda: [[f64; 4]; 3],
        values: [f64; 3],
        depth: u32,
    }
    let eval = |l: &[f64; 4]| tie_break(phi_h.eval_local(node_values, l), d);
    let to_leaf = |n: &Node| {
        let x: Vec<Vector<D>> = n
            .lambda
            .iter()
            .map(|l| std::array::from_fn(|c| (0..3).map(|m| l[m] * pts[m][c]).sum()))
            .collect();
        ValuedSimplex::new(&x, &n.values)
    };

    let corners = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]];
    let mut stack = vec![Node { lambda: corners, values: [node_values[0], node_values[1], node_values[2]], depth: 0 }];
    let mut leaves = Vec::new();
    let mut visited = 0usize;
    while let Some(n) = stack.pop() {
        visited += 1;
        if visited > settings.max_subcells {
            return Err(Error::ResourceLimit(format!(
                "sub-cell refinement of cell {cell} exceeds the cap of {}",
                settings.max_subcells
            )));
        }
        let m = margin(phi_h, diam0 / f64::from(1u32 << n.depth));
        let (lo, hi) = n.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let (skip, keep_whole) = match target {
            LeafTarget::Band => (lo > d + m || hi < -d - m, lo > -d + m && hi < d - m),
            LeafTarget::Surface => (lo > m || hi < -m, false),
        };
        if skip {
            continue;
        }
        if keep_whole || n.depth >= max_depth {
            leaves.push(to_leaf(&n));
            continue;
        }
        let [a, b, c] = n.lambda;
        let mid = |p: &[f64; 4], q: &[f64; 4]| -> [f64; 4] { std::array::from_fn(|i| 0.5 * (p[i] + q[i])) };
        let (ab, bc, ca) = (mid(&a, &b), mid(&b, &c), mid(&c, &a));
        let (vab, vbc, vca) = (eval(&ab), eval(&bc), eval(&ca));
        let [va, vb, vc] = n.values;
        let depth = n.depth + 1;
        // reverse order so the stack yields children in a fixed order
        stack.push(Node { lambda: [ab, bc, ca], values: [vab, vbc, vca], depth });
        stack.push(Node { lambda: [ca, bc, c], values: [vca, vbc, vc], depth });
        stack.push(Node { lambda: [ab, b, bc], values: [vab, vb, vbc], depth });
        stack.push(Node { lambda: [a, ab, ca], values: [va, vab, vca], depth });
    }
    Ok(leaves)
}
