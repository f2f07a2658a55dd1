//! Lagrange shape functions on simplices, written in barycentric coordinates.

use crate::linalg::small::{self, Matrix, Vector};

/// Nodal Lagrange element of order `r` on a `D`-simplex.
///
/// Nodes are barycentric multi-indices `alpha` with `|alpha| = r`; the node
/// sits at `sum_m alpha_m v_m / r`. Vertex nodes come first (in vertex
/// order), the remaining nodes follow in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LagrangeSimplex<const D: usize> {
    order: usize,
    nodes: Vec<Vec<usize>>,
    alphas: Vec<[usize; 4]>,
}

const MAX_ORDER: usize = 3;

impl<const D: usize> LagrangeSimplex<D> {
    pub fn new(order: usize) -> Self {
        assert!((1..=MAX_ORDER).contains(&order), "Lagrange order must be in 1..={MAX_ORDER}");
        let mut all = Vec::new();
        let mut alpha = vec![0usize; D + 1];
        enumerate(0, order, &mut alpha, &mut all);
        let is_vertex = |a: &Vec<usize>| a.iter().any(|&k| k == order);
        let mut nodes: Vec<Vec<usize>> = (0..=D)
            .map(|v| {
                let mut a = vec![0; D + 1];
                a[v] = order;
                a
            })
            .collect();
        all.sort();
        nodes.extend(all.into_iter().filter(|a| !is_vertex(a)));
        let alphas = nodes.iter().map(|a| std::array::from_fn(|m| if m <= D { a[m] } else { 0 })).collect();
        Self { order, nodes, alphas }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Barycentric multi-indices of the nodes.
    pub fn nodes(&self) -> &[Vec<usize>] {
        &self.nodes
    }

    /// Physical node coordinates on the simplex with `vertices`.
    pub fn node_points(&self, vertices: &[Vector<D>]) -> Vec<Vector<D>> {
        self.nodes
            .iter()
            .map(|a| {
                std::array::from_fn(|i| {
                    (0..=D).map(|m| a[m] as f64 * vertices[m][i]).sum::<f64>() / self.order as f64
                })
            })
            .collect()
    }

    // Silvester factors `prod_{l<a} (r lambda_m - l) / (l + 1)` and their
    // lambda-derivatives for every coordinate `m` and power `a <= r`.
    fn factors(&self, lambda: &[f64]) -> ([[f64; MAX_ORDER + 1]; 4], [[f64; MAX_ORDER + 1]; 4]) {
        // (r lambda - l) / (l + 1) = slope[l] lambda - shift[l]
        const SHIFT: [f64; MAX_ORDER] = [0.0, 0.5, 2.0 / 3.0];
        let r = self.order as f64;
        let slope: [f64; MAX_ORDER] = [r, r / 2.0, r / 3.0];
        let mut val = [[1.0; MAX_ORDER + 1]; 4];
        let mut der = [[0.0; MAX_ORDER + 1]; 4];
        for m in 0..=D {
            for l in 0..self.order {
                let c = slope[l] * lambda[m] - SHIFT[l];
                der[m][l + 1] = der[m][l] * c + val[m][l] * slope[l];
                val[m][l + 1] = val[m][l] * c;
            }
        }
        (val, der)
    }

    /// Values and barycentric derivatives in one pass, see [`Self::values`]
    /// and [`Self::lambda_gradients`].
    pub fn values_and_lambda_gradients(&self, lambda: &[f64], values: &mut [f64], grads: &mut [[f64; 4]]) {
        let (val, der) = self.factors(lambda);
        for ((v, o), a) in values.iter_mut().zip(grads.iter_mut()).zip(&self.alphas) {
            let f: [f64; 4] = std::array::from_fn(|m| if m <= D { val[m][a[m]] } else { 1.0 });
            *v = f[0] * f[1] * f[2] * f[3];
            for m in 0..=D {
                let mut g = der[m][a[m]];
                for mm in 0..=D {
                    if mm != m {
                        g *= f[mm];
                    }
                }
                o[m] = g;
            }
        }
    }

    /// Shape function values at barycentric point `lambda`.
    pub fn values(&self, lambda: &[f64], out: &mut [f64]) {
        if self.order == 1 {
            out[..=D].copy_from_slice(&lambda[..=D]);
            return;
        }
        let (val, _) = self.factors(lambda);
        for (o, a) in out.iter_mut().zip(&self.alphas) {
            let mut v = val[0][a[0]];
            for m in 1..=D {
                v *= val[m][a[m]];
            }
            *o = v;
        }
    }

    /// Derivatives with respect to each barycentric coordinate:
    /// `out[k][m] = d psi_k / d lambda_m`.
    pub fn lambda_gradients(&self, lambda: &[f64], out: &mut [[f64; 4]]) {
        if self.order == 1 {
            for (k, o) in out.iter_mut().enumerate().take(D + 1) {
                *o = [0.0; 4];
                o[k] = 1.0;
            }
            return;
        }
        let (val, der) = self.factors(lambda);
        for (o, a) in out.iter_mut().zip(&self.alphas) {
            for m in 0..=D {
                let mut g = der[m][a[m]];
                for mm in 0..=D {
                    if mm != m {
                        g *= val[mm][a[mm]];
                    }
                }
                o[m] = g;
            }
        }
    }
}

fn enumerate(pos: usize, remaining: usize, alpha: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == alpha.len() {
        alpha[pos] = remaining;
        out.push(alpha.clone());
        return;
    }
    for k in 0..=remaining {
        alpha[pos] = k;
        enumerate(pos + 1, remaining - k, alpha, out);
    }
}

/// Affine map between barycentric and physical coordinates of a simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexMap<const D: usize> {
    origin: Vector<D>,
    /// Rows are gradients of `lambda_1 .. lambda_D`.
    jac_inv: Matrix<D>,
    det: f64,
}

impl<const D: usize> SimplexMap<D> {
    /// Returns `None` for a degenerate simplex.
    pub fn new(vertices: &[Vector<D>]) -> Option<Self> {
        let origin = vertices[0];
        // column k = v_{k+1} - v_0
        let jac: Matrix<D> = std::array::from_fn(|i| std::array::from_fn(|k| vertices[k + 1][i] - origin[i]));
        let det = small::det(&jac);
        let jac_inv = small::inverse(&jac)?;
        Some(Self { origin, jac_inv, det })
    }

    /// Signed `D`-volume of the simplex.
    pub fn volume(&self) -> f64 {
        let fact: f64 = (1..=D).map(|k| k as f64).product();
        self.det / fact
    }

    pub fn barycentric(&self, x: &Vector<D>) -> [f64; 4] {
        let rel = small::sub(x, &self.origin);
        let mut l = [0.0; 4];
        let mut s = 0.0;
        for k in 0..D {
            l[k + 1] = small::dot(&self.jac_inv[k], &rel);
            s += l[k + 1];
        }
        l[0] = 1.0 - s;
        l
    }

    pub fn lambda_gradient(&self, m: usize) -> Vector<D> {
        if m == 0 {
            std::array::from_fn(|i| -(0..D).map(|k| self.jac_inv[k][i]).sum::<f64>())
        } else {
            self.jac_inv[m - 1]
        }
    }

    pub fn lambda_gradients(&self) -> [Vector<D>; 4] {
        std::array::from_fn(|m| if m <= D { self.lambda_gradient(m) } else { [0.0; D] })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_counts() {
        assert_eq!(LagrangeSimplex::<2>::new(1).num_nodes(), 3);
        assert_eq!(LagrangeSimplex::<2>::new(2).num_nodes(), 6);
        assert_eq!(LagrangeSimplex::<2>::new(3).num_nodes(), 10);
        assert_eq!(LagrangeSimplex::<3>::new(1).num_nodes(), 4);
        assert_eq!(LagrangeSimplex::<3>::new(2).num_nodes(), 10);
    }

    #[test]
    fn kronecker_property() {
        for order in 1..=3 {
            let e = LagrangeSimplex::<2>::new(order);
            let mut vals = vec![0.0; e.num_nodes()];
            for (i, a) in e.nodes().iter().enumerate() {
                let lambda: Vec<f64> = a.iter().map(|&k| k as f64 / order as f64).collect();
                e.values(&lambda, &mut vals);
                for (j, v) in vals.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-13, "order {order} node {i} basis {j}: {v}");
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_gradients_sum_to_zero() {
        let e = LagrangeSimplex::<2>::new(3);
        let lambda = [0.2, 0.3, 0.5, 0.0];
        let mut g = vec![[0.0; 4]; e.num_nodes()];
        e.lambda_gradients(&lambda, &mut g);
        let map = SimplexMap::<2>::new(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let grads = map.lambda_gradients();
        let mut total = [0.0; 2];
        for gk in &g {
            for m in 0..3 {
                for i in 0..2 {
                    total[i] += gk[m] * grads[m][i];
                }
            }
        }
        assert!(total[0].abs() < 1e-12 && total[1].abs() < 1e-12);
    }

    #[test]
    fn barycentric_roundtrip() {
        let map = SimplexMap::<3>::new(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 1.0, 1.0]]).unwrap();
        assert!((map.volume() - 1.0 / 6.0).abs() < 1e-15);
        let l = map.barycentric(&[1.0, 1.0, 0.0]);
        assert!((l[2] - 1.0).abs() < 1e-15 && l[0].abs() < 1e-15);
    }
}
