//! Independent oracles shared by the integration tests and the acceptance
//! harness.

use std::f64::consts::PI;

use nbfem::cutgeom::{clip_cell, cut_region, simplex_measure, volume_quadrature};
use nbfem::experiments::{preset_sphere, torus_point, Preset};
use nbfem::levelset::{CoefficientMode, SurfaceField, SurfaceKind};
use nbfem::linalg::small::{self, Vector};
use nbfem::quadrature::SimplexRule;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dense_cholesky, level, solve, Level};

// ---------------------------------------------------------------------------
// slicing oracle for polynomial integrals over {x in T : -d < phi(x) < d}

/// Gauss–Legendre nodes and weights on (0, 1) by Newton iteration on P_n.
pub fn gauss(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (0.5 * (1.0 - x), 1.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Random polynomial as `(coefficient, exponents)` terms of total degree `<= deg`.
pub fn monomials(dim: usize, deg: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut e = vec![0u32; dim];
    fn rec(k: usize, left: usize, e: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k == e.len() {
            out.push(e.clone());
            return;
        }
        for p in 0..=left {
            e[k] = p as u32;
            rec(k + 1, left - p, e, out);
        }
        e[k] = 0;
    }
    rec(0, deg, &mut e, &mut out);
    out
}

pub fn eval_poly<const D: usize>(terms: &[(f64, Vec<u32>)], x: &Vector<D>) -> f64 {
    terms.iter().map(|(c, e)| c * (0..D).map(|k| x[k].powi(e[k] as i32)).product::<f64>()).sum()
}

/// Points where the level `s` of the linear function crosses the simplex edges.
pub fn section<const D: usize>(pts: &[Vector<D>], vals: &[f64], s: f64) -> Vec<Vector<D>> {
    let mut out = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let (a, b) = (vals[i] - s, vals[j] - s);
            if a * b < 0.0 {
                let t = a / (a - b);
                out.push(small::lerp(&pts[i], &pts[j], t));
            }
        }
    }
    out
}

/// `∫ p` over the slab by integrating cross sections along `phi`.
pub fn slab_integral<const D: usize>(pts: &[Vector<D>], vals: &[f64], d: f64, p: &dyn Fn(&Vector<D>) -> f64) -> f64 {
    // gradient of the linear interpolant
    let mut jac = [[0.0; D]; D];
    let mut rhs = [0.0; D];
    for k in 0..D {
        for c in 0..D {
            jac[k][c] = pts[k + 1][c] - pts[0][c];
        }
        rhs[k] = vals[k + 1] - vals[0];
    }
    let inv = small::inverse(&jac).unwrap();
    let grad = small::mat_vec(&inv, &rhs);
    let gnorm = small::norm(&grad);

    let mut breaks: Vec<f64> = vals.iter().copied().chain([-d, d]).filter(|v| *v >= -d && *v <= d).collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let g = gauss(10);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a <= 0.0 {
            continue;
        }
        for &(t, wt) in &g {
            let s = a + t * (b - a);
            let sec = section(pts, vals, s);
            total += wt * (b - a) * section_integral(&sec, &grad, p, &g) / gnorm;
        }
    }
    total
}

pub fn section_integral<const D: usize>(sec: &[Vector<D>], grad: &Vector<D>, p: &dyn Fn(&Vector<D>) -> f64, g: &[(f64, f64)]) -> f64 {
    if D == 2 {
        if sec.len() != 2 {
            return 0.0;
        }
        let len = small::norm(&small::sub(&sec[1], &sec[0]));
        return g.iter().map(|&(t, w)| w * len * p(&small::lerp(&sec[0], &sec[1], t))).sum();
    }
    if sec.len() < 3 {
        return 0.0;
    }
    // order the convex section by angle around its centroid
    let c = sec.iter().fold([0.0; D], |acc, x| small::add(&acc, x));
    let c = small::scale(&c, 1.0 / sec.len() as f64);
    let n = small::scale(grad, 1.0 / small::norm(grad));
    let e1 = {
        let v = small::sub(&sec[0], &c);
        small::scale(&v, 1.0 / small::norm(&v))
    };
    let e2: Vector<D> = std::array::from_fn(|k| n[(k + 1) % 3] * e1[(k + 2) % 3] - n[(k + 2) % 3] * e1[(k + 1) % 3]);
    let mut ordered: Vec<(f64, Vector<D>)> = sec
        .iter()
        .map(|x| {
            let v = small::sub(x, &c);
            (small::dot(&v, &e2).atan2(small::dot(&v, &e1)), *x)
        })
        .collect();
    ordered.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut total = 0.0;
    for k in 0..ordered.len() {
        let (a, b) = (ordered[k].1, ordered[(k + 1) % ordered.len()].1);
        let u = small::sub(&a, &c);
        let v = small::sub(&b, &c);
        let cross: Vector<D> = std::array::from_fn(|i| u[(i + 1) % 3] * v[(i + 2) % 3] - u[(i + 2) % 3] * v[(i + 1) % 3]);
        let area2 = small::norm(&cross);
        // collapsed Gauss on the triangle (c, a, b)
        for &(s, ws) in g {
            for &(t, wt) in g {
                let x: Vector<D> = std::array::from_fn(|i| c[i] + s * (u[i] + t * (v[i] - u[i])));
                total += ws * wt * s * area2 * p(&x);
            }
        }
    }
    total
}

pub fn check_exactness<const D: usize>(pts: Vec<Vector<D>>, vals: Vec<f64>, d: f64, degree: usize, coeffs: Vec<f64>) {
    let terms: Vec<(f64, Vec<u32>)> = coeffs.into_iter().zip(monomials(D, degree)).collect();
    let subs = clip_cell(0, &pts, &vals, d).unwrap();
    let rule = SimplexRule::new(D, degree).unwrap();
    let got: f64 = volume_quadrature(&subs, &rule).iter().map(|q| q.weight * eval_poly(&terms, &q.x)).sum();
    let want = slab_integral(&pts, &vals, d, &|x| eval_poly(&terms, x));
    let abs_terms: Vec<(f64, Vec<u32>)> = terms.iter().map(|(c, e)| (c.abs(), e.clone())).collect();
    let scale = slab_integral(&pts, &vals, d, &|x| {
        abs_terms.iter().map(|(c, e)| c * (0..D).map(|k| x[k].abs().powi(e[k] as i32)).product::<f64>()).sum()
    });
    assert!((got - want).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE), "degree {degree}: {got} vs {want} (scale {scale})");
}

pub fn simplex_volume<const D: usize>(pts: &[Vector<D>]) -> f64 {
    let mut s = [[0.0; 4]; 4];
    for (i, p) in pts.iter().enumerate() {
        s[i][..D].copy_from_slice(p);
    }
    simplex_measure::<D>(&std::array::from_fn(|i| std::array::from_fn(|k| s[i][k])))
}

/// Filter for random cut configurations: a well-shaped simplex whose level
/// set range straddles at least one band boundary.
pub fn usable_cut<const D: usize>(pts: &[Vector<D>], vals: &[f64], d: f64) -> bool {
    let vol = simplex_volume(pts);
    let (lo, hi) = vals.iter().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(*v), b.max(*v)));
    vol > 0.02 && hi - lo > 0.1 && lo < d && hi > -d && (lo < -d || hi > d) && vals.iter().all(|v| (v.abs() - d).abs() > 1e-6)
}

/// Random configuration accepted by [`usable_cut`].
pub fn random_cut<const D: usize>(rng: &mut ChaCha8Rng) -> (Vec<Vector<D>>, Vec<f64>, f64) {
    loop {
        let pts: Vec<Vector<D>> = (0..=D).map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).collect();
        let vals: Vec<f64> = (0..=D).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let d = rng.gen_range(0.05..0.8);
        if usable_cut(&pts, &vals, d) {
            return (pts, vals, d);
        }
    }
}

// ---------------------------------------------------------------------------
// sampled band points

/// Surface point, unit normal and a random offset inside the admissible band.
pub fn band_samples<const D: usize>(surface: &SurfaceField<D>, n: usize, seed: u64) -> Vec<(Vector<D>, Vector<D>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 0.5 / surface.curvature_bound();
    (0..n)
        .map(|_| {
            let (p, nrm): (Vec<f64>, Vec<f64>) = match D {
                2 => {
                    let t: f64 = rng.gen_range(0.0..2.0 * PI);
                    (vec![t.cos(), t.sin()], vec![t.cos(), t.sin()])
                }
                _ => match surface.kind() {
                    SurfaceKind::Sphere { .. } => {
                        let z: f64 = rng.gen_range(-1.0..1.0);
                        let t: f64 = rng.gen_range(0.0..2.0 * PI);
                        let r = (1.0 - z * z).sqrt();
                        let v = vec![r * t.cos(), r * t.sin(), z];
                        (v.clone(), v)
                    }
                    _ => {
                        let (phi, theta): (f64, f64) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
                        let p = torus_point(phi, theta);
                        let nrm = vec![phi.cos() * theta.cos(), phi.sin() * theta.cos(), theta.sin()];
                        (p.to_vec(), nrm)
                    }
                },
            };
            let off: f64 = rng.gen_range(-d..d);
            let p: Vector<D> = std::array::from_fn(|k| p[k]);
            let nrm: Vector<D> = std::array::from_fn(|k| nrm[k]);
            (small::add(&p, &small::scale(&nrm, off)), nrm, off)
        })
        .collect()
}

pub fn check_distance_properties<const D: usize>(surface: &SurfaceField<D>) {
    for (x, normal, off) in band_samples(surface, 10_000, 5) {
        let g = surface.geometry(&x).unwrap();
        assert!((small::norm(&g.normal) - 1.0).abs() < 1e-12);
        assert!(small::norm(&small::mat_vec(&g.hessian, &g.normal)) < 1e-12);
        assert!((g.phi - off).abs() < 1e-12);
        assert!(small::norm(&small::sub(&g.normal, &normal)) < 1e-10);
        let p = g.closest_point(&x);
        assert!(surface.signed_distance(&p).abs() < 1e-10);
        // finite-difference gradient of the distance
        let step = 1e-6;
        let fd: Vector<D> = std::array::from_fn(|k| {
            let mut xp = x;
            let mut xm = x;
            xp[k] += step;
            xm[k] -= step;
            (surface.signed_distance(&xp) - surface.signed_distance(&xm)) / (2.0 * step)
        });
        assert!(small::norm(&small::sub(&fd, &g.normal)) < 1e-6);
    }
}

pub fn check_spectral_bounds<const D: usize>(surface: &SurfaceField<D>) {
    let mut checked = 0;
    let mut seed = 9;
    while checked < 10_000 {
        for (x, _, _) in band_samples(surface, 10_000, seed) {
            let g = surface.geometry(&x).unwrap();
            let m = small::mat_add_scaled(&small::identity(), &g.hessian, -g.phi);
            let c = surface.coefficient(CoefficientMode::ExactHessian, &x).unwrap();
            assert!((c.mu - small::det(&m)).abs() < 1e-14);
            // sharp range 1 / (1 + phi kappa) over the whole admissible band
            for ev in small::sym_eigenvalues(&m) {
                assert!((2.0 / 3.0 - 1e-12..=2.0 + 1e-12).contains(&ev), "eigenvalue {ev} at {x:?}");
            }
            // the [1/2, 3/2] bounds need |phi| ||H(x)|| <= 1/2 at the point itself
            let hnorm = small::sym_eigenvalues(&g.hessian).iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if g.phi.abs() * hnorm > 0.5 || checked == 10_000 {
                continue;
            }
            checked += 1;
            for ev in small::sym_eigenvalues(&m) {
                assert!((0.5..=1.5).contains(&ev), "eigenvalue {ev} at {x:?}");
            }
            let det = small::det(&m);
            assert!((0.25..=2.25).contains(&det), "determinant {det} at {x:?}");
        }
        seed += 1;
    }
}

pub fn check_normal_constancy<const D: usize>(preset: &Preset<D>) {
    for (x, _, _) in band_samples(&preset.surface, 2_000, 13) {
        let n = preset.surface.normal(&x).unwrap();
        let step = 1e-5;
        let ue = |y: &Vector<D>| preset.u(&preset.surface.closest_point(y).unwrap());
        let fd = (ue(&small::add(&x, &small::scale(&n, step))) - ue(&small::sub(&x, &small::scale(&n, step)))) / (2.0 * step);
        assert!(fd.abs() < 1e-6, "{:?}: normal derivative {fd:e}", preset.name);
    }
}

pub fn check_sphere_coarea() {
    let sphere = preset_sphere().surface;
    let rho = 1.5;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let v: Vector<3> = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let x = small::scale(&v, rho / small::norm(&v));
        let mu = sphere.coefficient(CoefficientMode::ExactHessian, &x).unwrap().mu;
        assert!((mu * 4.0 * PI * rho * rho - 4.0 * PI).abs() < 1e-9);
    }
}

// ---------------------------------------------------------------------------
// discrete systems

/// `a_h(u_h, psi_i) - l(psi_i)` recomputed cell by cell from the basis
/// functions and the pointwise coefficients, without the assembled matrix.
pub fn galerkin_residual<const D: usize>(preset: &Preset<D>, mode: CoefficientMode, lvl: &Level<D>, uh: &[f64]) -> Vec<f64> {
    let space = &lvl.space;
    let element = space.element();
    let nb = space.nodes_per_cell();
    let mut res = vec![0.0; space.num_dofs()];
    let mut vals = vec![0.0; nb];
    let mut dl = vec![[0.0; 4]; nb];
    for pos in 0..space.num_cells() {
        let region = cut_region(space.active(), pos, &lvl.quad).unwrap();
        let map = space.cell_map(pos);
        let dofs = space.cell_dofs(pos);
        for qp in &region.volume_quad {
            let lambda = map.barycentric(&qp.x);
            element.values(&lambda, &mut vals);
            element.lambda_gradients(&lambda, &mut dl);
            let grads: Vec<Vector<D>> = (0..nb)
                .map(|k| (0..=D).fold([0.0; D], |g, m| small::add(&g, &small::scale(&map.lambda_gradient(m), dl[k][m]))))
                .collect();
            let mut u = 0.0;
            let mut gu = [0.0; D];
            for k in 0..nb {
                u += uh[dofs[k]] * vals[k];
                gu = small::add(&gu, &small::scale(&grads[k], uh[dofs[k]]));
            }
            let (tensor, mu) = match mode {
                CoefficientMode::ExactHessian => {
                    let c = preset.surface.coefficient(mode, &qp.x).unwrap();
                    (c.tensor, c.mu)
                }
                CoefficientMode::ZeroHessian => (small::identity(), 1.0),
            };
            let f = preset.f(&preset.surface.closest_point(&qp.x).unwrap());
            let agu = small::mat_vec(&tensor, &gu);
            for k in 0..nb {
                res[dofs[k]] += qp.weight * (small::dot(&agu, &grads[k]) + (preset.alpha * u - f) * mu * vals[k]);
            }
        }
    }
    res
}

pub fn check_galerkin<const D: usize>(preset: &Preset<D>, gamma: f64, mode: CoefficientMode, order: usize, lvl_no: u32) {
    let lvl = level(preset, gamma, mode, order, lvl_no);
    let uh = solve(&lvl.space, &lvl.system);
    let res = galerkin_residual(preset, mode, &lvl, &uh);
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let scale = lvl.system.matrix.norm_inf() * inf(&uh) + inf(&lvl.system.rhs);
    let worst = inf(&res);
    assert!(worst <= 1e-10 * scale, "{:?} order {order}: residual {worst:e}, scale {scale:e}", preset.name);
}

/// Symmetry, positive diagonal and a dense Cholesky witness.
pub fn check_symmetric_spd<const D: usize>(lvl: &Level<D>) {
    let m = &lvl.system.matrix;
    assert!(m.asymmetry() <= 1e-13 * m.max_abs());
    assert!(m.is_structurally_symmetric());
    assert!(m.diagonal().iter().all(|&d| d > 0.0));
    assert!(m.dim() <= 2000, "dense witness limited to small systems, n = {}", m.dim());
    assert!(dense_cholesky(&m.to_dense()).is_some());
}

