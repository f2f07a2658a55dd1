//! Quadrature rules on reference simplices and segments.
//!
//! Points are stored in barycentric coordinates and weights are normalized to
//! sum to one, so a rule is mapped to a physical simplex by scaling the
//! weights with its volume.

use crate::error::{Error, Result};

/// Highest polynomial exactness offered on triangles and tetrahedra.
pub const MAX_SIMPLEX_DEGREE: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexRule {
    dim: usize,
    degree: usize,
    points: Vec<[f64; 4]>,
    weights: Vec<f64>,
}

impl SimplexRule {
    /// Rule on the reference `dim`-simplex exact for polynomials of total
    /// degree `degree`.
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        if degree > MAX_SIMPLEX_DEGREE {
            return Err(Error::UnsupportedDegree(degree));
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::Unsupported(format!("simplex quadrature in dimension {dim}")));
        }
        let (points, weights) = match (dim, degree) {
            (_, 0 | 1) => {
                let c = 1.0 / (dim + 1) as f64;
                let mut p = [0.0; 4];
                p[..=dim].iter_mut().for_each(|v| *v = c);
                (vec![p], vec![1.0])
            }
            (2, 2) => {
                let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
                let pts = vec![[a, b, b, 0.0], [b, a, b, 0.0], [b, b, a, 0.0]];
                (pts, vec![1.0 / 3.0; 3])
            }
            (2, 4) => symmetric_triangle(
                &[],
                &[(0.445_948_490_915_964_9, 0.223_381_589_678_011_5), (0.091_576_213_509_770_74, 0.109_951_743_655_321_9)],
                &[],
            ),
            (2, 5) => {
                let r = 15f64.sqrt();
                symmetric_triangle(
                    &[0.225],
                    &[((6.0 - r) / 21.0, (155.0 - r) / 1200.0), ((6.0 + r) / 21.0, (155.0 + r) / 1200.0)],
                    &[],
                )
            }
            (2, 6) => symmetric_triangle(
                &[],
                &[(0.249_286_745_170_910_4, 0.116_786_275_726_379_4), (0.063_089_014_491_502_23, 0.050_844_906_370_206_82)],
                &[(0.053_145_049_844_816_95, 0.310_352_451_033_784_4, 0.082_851_075_618_373_58)],
            ),
            (3, 2) => {
                let a = 0.585_410_196_624_968_5;
                let b = 0.138_196_601_125_010_5;
                let pts = vec![[a, b, b, b], [b, a, b, b], [b, b, a, b], [b, b, b, a]];
                (pts, vec![0.25; 4])
            }
            _ => collapsed_product(dim, degree),
        };
        Ok(Self { dim, degree, points, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; 4], f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// Fully symmetric triangle rule from its orbits: an optional centroid
/// weight, `(a, w)` for the three points `(1 - 2a, a, a)`, and `(a, b, w)`
/// for the six permutations of `(a, b, 1 - a - b)`.
fn symmetric_triangle(centroid: &[f64], two: &[(f64, f64)], three: &[(f64, f64, f64)]) -> (Vec<[f64; 4]>, Vec<f64>) {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for &w in centroid {
        points.push([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0]);
        weights.push(w);
    }
    for &(a, w) in two {
        let b = 1.0 - 2.0 * a;
        for p in [[b, a, a], [a, b, a], [a, a, b]] {
            points.push([p[0], p[1], p[2], 0.0]);
            weights.push(w);
        }
    }
    for &(a, b, w) in three {
        let c = 1.0 - a - b;
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            points.push([p[0], p[1], p[2], 0.0]);
            weights.push(w);
        }
    }
    (points, weights)
}

/// Duffy-collapsed tensor Gauss rule on the reference simplex.
fn collapsed_product(dim: usize, degree: usize) -> (Vec<[f64; 4]>, Vec<f64>) {
    // direction k carries the Jacobian factor (1 - xi_k)^(dim - 1 - k)
    let rules: Vec<(Vec<f64>, Vec<f64>)> =
        (0..dim).map(|k| gauss_legendre_unit((degree + dim - 1 - k) / 2 + 1)).collect();
    let volume: f64 = 1.0 / (1..=dim).map(|k| k as f64).product::<f64>();

    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut idx = vec![0usize; dim];
    loop {
        let mut coords = [0.0f64; 3];
        let mut scale = 1.0;
        let mut w = 1.0;
        for k in 0..dim {
            let (ref x, ref wk) = rules[k];
            let xi = x[idx[k]];
            coords[k] = xi * scale;
            w *= wk[idx[k]] * (1.0 - xi).powi((dim - 1 - k) as i32);
            scale *= 1.0 - xi;
        }
        let mut bary = [0.0; 4];
        let mut s = 0.0;
        for k in 0..dim {
            bary[k + 1] = coords[k];
            s += coords[k];
        }
        bary[0] = 1.0 - s;
        points.push(bary);
        weights.push(w / volume);

        // odometer
        let mut k = 0;
        loop {
            if k == dim {
                return (points, weights);
            }
            idx[k] += 1;
            if idx[k] < rules[k].0.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// `n`-point Gauss-Legendre rule on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_n
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(z), p0 = P_{n-1}(z)
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

/// Gauss rule on `[0, 1]` exact up to `degree`.
pub fn segment_rule(degree: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_legendre_unit(degree / 2 + 1)
}
