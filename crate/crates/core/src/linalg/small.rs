//! Fixed-size vector and matrix helpers for D = 2, 3.

pub type Vector<const D: usize> = [f64; D];
pub type Matrix<const D: usize> = [[f64; D]; D];

#[inline]
pub fn dot<const D: usize>(a: &Vector<D>, b: &Vector<D>) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn norm<const D: usize>(a: &Vector<D>) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub<const D: usize>(a: &Vector<D>, b: &Vector<D>) -> Vector<D> {
    std::array::from_fn(|i| a[i] - b[i])
}

#[inline]
pub fn add<const D: usize>(a: &Vector<D>, b: &Vector<D>) -> Vector<D> {
    std::array::from_fn(|i| a[i] + b[i])
}

#[inline]
pub fn scale<const D: usize>(a: &Vector<D>, s: f64) -> Vector<D> {
    std::array::from_fn(|i| a[i] * s)
}

/// `a + t (b - a)`
#[inline]
pub fn lerp<const D: usize>(a: &Vector<D>, b: &Vector<D>, t: f64) -> Vector<D> {
    std::array::from_fn(|i| a[i] + t * (b[i] - a[i]))
}

pub fn identity<const D: usize>() -> Matrix<D> {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 }))
}

pub fn outer<const D: usize>(a: &Vector<D>, b: &Vector<D>) -> Matrix<D> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i] * b[j]))
}

pub fn mat_vec<const D: usize>(m: &Matrix<D>, v: &Vector<D>) -> Vector<D> {
    std::array::from_fn(|i| dot(&m[i], v))
}

pub fn mat_mul<const D: usize>(a: &Matrix<D>, b: &Matrix<D>) -> Matrix<D> {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut s = 0.0;
            for k in 0..D {
                s += a[i][k] * b[k][j];
            }
            s
        })
    })
}

pub fn mat_scale<const D: usize>(a: &Matrix<D>, s: f64) -> Matrix<D> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] * s))
}

pub fn mat_add_scaled<const D: usize>(a: &Matrix<D>, b: &Matrix<D>, s: f64) -> Matrix<D> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] + s * b[i][j]))
}

pub fn transpose<const D: usize>(a: &Matrix<D>) -> Matrix<D> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i]))
}

pub fn det<const D: usize>(m: &Matrix<D>) -> f64 {
    match D {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => unimplemented!("det only for D <= 3"),
    }
}

/// Inverse by cofactors; `None` when the determinant vanishes.
pub fn inverse<const D: usize>(m: &Matrix<D>) -> Option<Matrix<D>> {
    let det = det(m);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let inv = 1.0 / det;
    let mut out = [[0.0; D]; D];
    match D {
        1 => out[0][0] = inv,
        2 => {
            out[0][0] = m[1][1] * inv;
            out[0][1] = -m[0][1] * inv;
            out[1][0] = -m[1][0] * inv;
            out[1][1] = m[0][0] * inv;
        }
        3 => {
            out[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv;
            out[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv;
            out[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv;
            out[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv;
            out[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv;
            out[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv;
            out[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv;
            out[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv;
            out[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv;
        }
        _ => unimplemented!("inverse only for D <= 3"),
    }
    Some(out)
}

/// Eigenvalues of a symmetric 2x2 or 3x3 matrix, ascending.
pub fn sym_eigenvalues<const D: usize>(m: &Matrix<D>) -> Vector<D> {
    let mut out = [0.0; D];
    match D {
        1 => out[0] = m[0][0],
        2 => {
            let tr = m[0][0] + m[1][1];
            let diff = m[0][0] - m[1][1];
            let disc = (0.25 * diff * diff + m[0][1] * m[1][0]).max(0.0).sqrt();
            out[0] = 0.5 * tr - disc;
            out[1] = 0.5 * tr + disc;
        }
        3 => {
            // closed form for symmetric 3x3 (trigonometric solution)
            let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
            let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
            if p1 == 0.0 {
                let mut d = [m[0][0], m[1][1], m[2][2]];
                d.sort_by(|a, b| a.total_cmp(b));
                out[..3].copy_from_slice(&d);
                return out;
            }
            let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            let mut b = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    b[i][j] = (m[i][j] - if i == j { q } else { 0.0 }) / p;
                }
            }
            let r = (det(&b) / 2.0).clamp(-1.0, 1.0);
            let phi = r.acos() / 3.0;
            let e1 = q + 2.0 * p * phi.cos();
            let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
            let e2 = 3.0 * q - e1 - e3;
            let mut d = [e1, e2, e3];
            d.sort_by(|a, b| a.total_cmp(b));
            out[..3].copy_from_slice(&d);
        }
        _ => unimplemented!("eigenvalues only for D <= 3"),
    }
    out
}
