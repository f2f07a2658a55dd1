//! Half-space clipping of simplices against a linear level function.

use crate::linalg::small::{lerp, Vector};

/// Simplex vertices; only the first `D + 1` entries are meaningful.
pub type Simplex<const D: usize> = [Vector<D>; 4];

/// A simplex together with the values of a linear function at its vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValuedSimplex<const D: usize> {
    pub vertices: Simplex<D>,
    pub values: [f64; 4],
}

impl<const D: usize> ValuedSimplex<D> {
    pub fn new(points: &[Vector<D>], values: &[f64]) -> Self {
        let mut vertices = [[0.0; D]; 4];
        let mut vals = [0.0; 4];
        vertices[..=D].copy_from_slice(&points[..=D]);
        vals[..=D].copy_from_slice(&values[..=D]);
        Self { vertices, values: vals }
    }
}

/// Keep the part of `s` where `sign * (value - level) < 0`, appending the
/// pieces (as simplices) to `out`.
///
/// `sign = 1` keeps `value < level`, `sign = -1` keeps `value > level`.
pub fn clip_halfspace<const D: usize>(s: &ValuedSimplex<D>, level: f64, sign: f64, out: &mut Vec<ValuedSimplex<D>>) {
    let inside: Vec<usize> = (0..=D).filter(|&i| sign * (s.values[i] - level) < 0.0).collect();
    let outside: Vec<usize> = (0..=D).filter(|&i| sign * (s.values[i] - level) >= 0.0).collect();
    if inside.is_empty() {
        return;
    }
    if outside.is_empty() {
        out.push(*s);
        return;
    }
    // point on edge (i, j) where the function equals `level`
    let cut = |i: usize, j: usize| -> (Vector<D>, f64) {
        let (vi, vj) = (s.values[i], s.values[j]);
        let t = (level - vi) / (vj - vi);
        (lerp(&s.vertices[i], &s.vertices[j], t), level)
    };
    let vert = |i: usize| (s.vertices[i], s.values[i]);
    let mut push = |pts: &[(Vector<D>, f64)]| {
        let mut vs = ValuedSimplex { vertices: [[0.0; D]; 4], values: [0.0; 4] };
        for (k, (p, v)) in pts.iter().enumerate() {
            vs.vertices[k] = *p;
            vs.values[k] = *v;
        }
        out.push(vs);
    };

    match (D, inside.len()) {
        (2, 1) => {
            let (a, b, c) = (inside[0], outside[0], outside[1]);
            push(&[vert(a), cut(a, b), cut(a, c)]);
        }
        (2, 2) => {
            let (a, b, c) = (inside[0], inside[1], outside[0]);
            let (pbc, pac) = (cut(b, c), cut(a, c));
            push(&[vert(a), vert(b), pbc]);
            push(&[vert(a), pbc, pac]);
        }
        (3, 1) => {
            let a = inside[0];
            let (b, c, d) = (outside[0], outside[1], outside[2]);
            push(&[vert(a), cut(a, b), cut(a, c), cut(a, d)]);
        }
        (3, 2) => {
            let (a, b) = (inside[0], inside[1]);
            let (c, d) = (outside[0], outside[1]);
            prism(&mut push, [vert(a), cut(a, c), cut(a, d)], [vert(b), cut(b, c), cut(b, d)]);
        }
        (3, 3) => {
            let (a, b, c) = (inside[0], inside[1], inside[2]);
            let d = outside[0];
            prism(&mut push, [vert(a), vert(b), vert(c)], [cut(a, d), cut(b, d), cut(c, d)]);
        }
        _ => unreachable!("clipping is implemented for triangles and tetrahedra"),
    }
}

/// Split the triangular prism with bottom `(a, b, c)` and top `(a', b', c')`
/// into three tetrahedra.
fn prism<const D: usize>(
    push: &mut impl FnMut(&[(Vector<D>, f64)]),
    bottom: [(Vector<D>, f64); 3],
    top: [(Vector<D>, f64); 3],
) {
    let [a, b, c] = bottom;
    let [a2, b2, c2] = top;
    push(&[a, b, c, a2]);
    push(&[b, c, a2, b2]);
    push(&[c, a2, b2, c2]);
}

/// Decompose `{ -d < value < d }` within a simplex carrying a linear
/// function. Returns the simplex itself when it lies inside the band.
pub fn clip_band<const D: usize>(s: &ValuedSimplex<D>, d: f64) -> Vec<ValuedSimplex<D>> {
    if s.values[..=D].iter().all(|v| v.abs() < d) {
        return vec![*s];
    }
    let mut upper = Vec::new();
    clip_halfspace(s, d, 1.0, &mut upper);
    let mut band = Vec::new();
    for piece in &upper {
        clip_halfspace(piece, -d, -1.0, &mut band);
    }
    band
}

/// Measure of a simplex (absolute value).
pub fn simplex_measure<const D: usize>(v: &Simplex<D>) -> f64 {
    match D {
        2 => {
            let (a, b, c) = (v[0], v[1], v[2]);
            0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs()
        }
        3 => {
            let e: [[f64; 3]; 3] = std::array::from_fn(|k| std::array::from_fn(|i| v[k + 1][i] - v[0][i]));
            let det = e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1]) - e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0])
                + e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0]);
            det.abs() / 6.0
        }
        _ => unreachable!(),
    }
}

/// Zero level of a linear function on a simplex: a segment (2D) or a
/// triangle / quadrilateral (3D), returned as a list of flat simplices of
/// one dimension lower (2 points per segment, 3 per triangle).
pub fn zero_level_pieces<const D: usize>(s: &ValuedSimplex<D>) -> Vec<Vec<Vector<D>>> {
    let neg: Vec<usize> = (0..=D).filter(|&i| s.values[i] < 0.0).collect();
    let pos: Vec<usize> = (0..=D).filter(|&i| s.values[i] >= 0.0).collect();
    if neg.is_empty() || pos.is_empty() {
        return Vec::new();
    }
    let cut = |i: usize, j: usize| {
        let (vi, vj) = (s.values[i], s.values[j]);
        lerp(&s.vertices[i], &s.vertices[j], -vi / (vj - vi))
    };
    match (D, neg.len()) {
        (2, 1) => vec![vec![cut(neg[0], pos[0]), cut(neg[0], pos[1])]],
        (2, 2) => vec![vec![cut(neg[0], pos[0]), cut(neg[1], pos[0])]],
        (3, 1) => vec![vec![cut(neg[0], pos[0]), cut(neg[0], pos[1]), cut(neg[0], pos[2])]],
        (3, 3) => vec![vec![cut(neg[0], pos[0]), cut(neg[1], pos[0]), cut(neg[2], pos[0])]],
        (3, 2) => {
            let (a, b) = (neg[0], neg[1]);
            let (c, d) = (pos[0], pos[1]);
            // cyclic order around the quadrilateral
            let q = [cut(a, c), cut(a, d), cut(b, d), cut(b, c)];
            vec![vec![q[0], q[1], q[2]], vec![q[0], q[2], q[3]]]
        }
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(pieces: &[ValuedSimplex<2>]) -> f64 {
        pieces.iter().map(|p| simplex_measure(&p.vertices)).sum()
    }

    #[test]
    fn strip_in_reference_triangle() {
        let s = ValuedSimplex::<2>::new(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], &[-0.5, 0.5, 0.5]);
        let band = clip_band(&s, 0.25);
        assert!((total(&band) - 0.25).abs() < 1e-15);
        let whole = clip_band(&s, 1.0);
        assert_eq!(whole.len(), 1);
        assert!((total(&whole) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pieces_stay_inside_band() {
        let s = ValuedSimplex::<3>::new(
            &[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            &[-0.1, 0.1, 0.1, 0.1],
        );
        for piece in clip_band(&s, 0.05) {
            for v in &piece.values[..4] {
                assert!(v.abs() <= 0.05 + 1e-15);
            }
        }
    }

    #[test]
    fn zero_level_segment() {
        let s = ValuedSimplex::<2>::new(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], &[-0.5, 0.5, 0.5]);
        let seg = zero_level_pieces(&s);
        assert_eq!(seg.len(), 1);
        let len = ((seg[0][0][0] - seg[0][1][0]).powi(2) + (seg[0][0][1] - seg[0][1][1]).powi(2)).sqrt();
        assert!((len - 0.5f64.sqrt()).abs() < 1e-15);
    }
}
