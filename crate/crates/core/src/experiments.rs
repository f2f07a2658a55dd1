//! Manufactured test problems on the circle, the sphere and the torus.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levelset::{CoefficientMode, SurfaceField};
use crate::linalg::small::{self, Vector};
use crate::mesh::BoundingBox;

const TORUS_R: f64 = 1.0;
const TORUS_MINOR: f64 = 0.6;

/// Names accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PresetName {
    Circle,
    Sphere,
    Torus,
    CircleP2,
    CircleP3,
}

impl PresetName {
    pub const ALL: [PresetName; 5] =
        [PresetName::Circle, PresetName::Sphere, PresetName::Torus, PresetName::CircleP2, PresetName::CircleP3];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::Circle => "circle",
            PresetName::Sphere => "sphere",
            PresetName::Torus => "torus",
            PresetName::CircleP2 => "circle-p2",
            PresetName::CircleP3 => "circle-p3",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            PresetName::Sphere | PresetName::Torus => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset '{s}' (expected circle, sphere, torus, circle-p2 or circle-p3)")))
    }
}

/// Exact solutions known in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Manufactured {
    /// `cos 5θ` on the unit circle.
    CircleCos5,
    /// Degree-3 spherical harmonic `12 (3 x1² x2 − x2³) / |x|³`.
    SphereHarmonic,
    /// `sin 3φ cos(3θ + φ)` on the torus.
    TorusWave,
}

/// A complete problem definition.
#[derive(Debug, Clone)]
pub struct Preset<const D: usize> {
    pub name: PresetName,
    pub surface: SurfaceField<D>,
    pub solution: Manufactured,
    pub alpha: f64,
    pub bbox: BoundingBox<D>,
    pub default_gamma: f64,
    pub default_order: usize,
    pub default_mode: CoefficientMode,
    /// Reference size in `h' = h^q / h0^(q-1)` for curved level sets.
    pub sub_h0: f64,
}

/// Default `h0`. With `h0 = 0.1` the piecewise linear surrogate of the P3
/// level set still accounts for about half of the L2 error on level 1;
/// `h0 = 0.2` pushes it below one percent.
pub const SUB_H0: f64 = 0.2;

pub fn preset_circle() -> Preset<2> {
    Preset {
        name: PresetName::Circle,
        surface: SurfaceField::circle(1.0).expect("unit circle"),
        solution: Manufactured::CircleCos5,
        alpha: 1.0,
        bbox: BoundingBox::symmetric(2.0),
        default_gamma: 5.0,
        default_order: 1,
        default_mode: CoefficientMode::ExactHessian,
        sub_h0: SUB_H0,
    }
}

pub fn preset_sphere() -> Preset<3> {
    Preset {
        name: PresetName::Sphere,
        surface: SurfaceField::sphere(1.0).expect("unit sphere"),
        solution: Manufactured::SphereHarmonic,
        alpha: 1.0,
        bbox: BoundingBox::symmetric(2.0),
        default_gamma: 1.0,
        default_order: 1,
        default_mode: CoefficientMode::ExactHessian,
        sub_h0: SUB_H0,
    }
}

pub fn preset_torus() -> Preset<3> {
    Preset {
        name: PresetName::Torus,
        surface: SurfaceField::torus(TORUS_R, TORUS_MINOR).expect("torus"),
        solution: Manufactured::TorusWave,
        alpha: 1.0,
        bbox: BoundingBox::symmetric(2.0),
        default_gamma: 1.0,
        default_order: 1,
        default_mode: CoefficientMode::ExactHessian,
        sub_h0: SUB_H0,
    }
}

/// Circle problem with `P_r` elements and a level set of the same order.
pub fn preset_circle_highorder(r: usize) -> Result<Preset<2>> {
    let name = match r {
        2 => PresetName::CircleP2,
        3 => PresetName::CircleP3,
        _ => return Err(Error::Unsupported(format!("high-order circle preset needs r in {{2, 3}}, got {r}"))),
    };
    Ok(Preset { name, default_gamma: 3.0, default_order: r, ..preset_circle() })
}

/// Polar angle in the plane.
fn angle2(x: f64, y: f64) -> f64 {
    y.atan2(x)
}

/// `(cos 5t, sin 5t, cos t, sin t)` for the polar angle `t` of `(x, y)`,
/// through the quintuple-angle polynomials (no trigonometric calls).
fn quintuple_angle(x: f64, y: f64) -> (f64, f64, f64, f64) {
    let r = x.hypot(y);
    if r == 0.0 {
        // atan2(0, 0) = 0
        return (1.0, 0.0, 1.0, 0.0);
    }
    let (c, s) = (x / r, y / r);
    let quint = |v: f64| v * (16.0 * v.powi(4) - 20.0 * v * v + 5.0);
    (quint(c), quint(s), c, s)
}

/// Toroidal angles `(φ, θ)` of `x`; both are constant along normals.
pub fn torus_angles(x: &[f64]) -> (f64, f64) {
    let rho = x[0].hypot(x[1]);
    (angle2(x[0], x[1]), angle2(rho - TORUS_R, x[2]))
}

/// Surface point with toroidal angles `(φ, θ)`.
pub fn torus_point(phi: f64, theta: f64) -> [f64; 3] {
    let w = TORUS_R + TORUS_MINOR * theta.cos();
    [w * phi.cos(), w * phi.sin(), TORUS_MINOR * theta.sin()]
}

fn torus_u(phi: f64, theta: f64) -> f64 {
    (3.0 * phi).sin() * (3.0 * theta + phi).cos()
}

impl<const D: usize> Preset<D> {
    pub fn dim(&self) -> usize {
        D
    }

    /// Exact solution, evaluated through its normal extension so that any
    /// point of the band is accepted.
    pub fn u(&self, x: &Vector<D>) -> f64 {
        match self.solution {
            Manufactured::CircleCos5 => quintuple_angle(x[0], x[1]).0,
            Manufactured::SphereHarmonic => {
                let r = small::norm(x);
                12.0 * (3.0 * x[0] * x[0] * x[1] - x[1].powi(3)) / r.powi(3)
            }
            Manufactured::TorusWave => {
                let (phi, theta) = torus_angles(x);
                torus_u(phi, theta)
            }
        }
    }

    /// Right-hand side, constant along normals like `u`.
    pub fn f(&self, x: &Vector<D>) -> f64 {
        match self.solution {
            Manufactured::CircleCos5 => 26.0 * quintuple_angle(x[0], x[1]).0,
            Manufactured::SphereHarmonic => 13.0 * self.u(x),
            Manufactured::TorusWave => {
                let (phi, theta) = torus_angles(x);
                let (r, big_r) = (TORUS_MINOR, TORUS_R);
                let w = big_r + r * theta.cos();
                let (s3, c3) = (3.0 * phi).sin_cos();
                let (sa, ca) = (3.0 * theta + phi).sin_cos();
                9.0 * s3 * ca / (r * r) + (10.0 * s3 * ca + 6.0 * c3 * sa) / (w * w)
                    - 3.0 * theta.sin() * s3 * sa / (r * w)
                    + s3 * ca
            }
        }
    }

    /// Tangential gradient of `u` at a point `y` on the surface.
    pub fn grad_u(&self, y: &Vector<D>) -> Vector<D> {
        let mut g = [0.0; D];
        match self.solution {
            Manufactured::CircleCos5 => {
                let (_, s5, c, s1) = quintuple_angle(y[0], y[1]);
                let s = -5.0 * s5 / small::norm(y);
                g[0] = -s1 * s;
                g[1] = c * s;
            }
            Manufactured::SphereHarmonic => {
                let r2 = small::dot(y, y);
                let r = r2.sqrt();
                let gv = 3.0 * y[0] * y[0] * y[1] - y[1].powi(3);
                let dg = [6.0 * y[0] * y[1], 3.0 * y[0] * y[0] - 3.0 * y[1] * y[1], 0.0];
                for i in 0..D {
                    g[i] = 12.0 * (dg[i] / r.powi(3) - 3.0 * gv * y[i] / (r2 * r2 * r));
                }
            }
            Manufactured::TorusWave => {
                let (phi, theta) = torus_angles(y);
                let w = TORUS_R + TORUS_MINOR * theta.cos();
                let (s3, c3) = (3.0 * phi).sin_cos();
                let (sa, ca) = (3.0 * theta + phi).sin_cos();
                let u_phi = 3.0 * c3 * ca - s3 * sa;
                let u_theta = -3.0 * s3 * sa;
                let (sp, cp) = phi.sin_cos();
                let (st, ct) = theta.sin_cos();
                let e_phi = [-sp, cp, 0.0];
                let e_theta = [-cp * st, -sp * st, ct];
                for i in 0..D {
                    g[i] = u_phi / w * e_phi[i] + u_theta / TORUS_MINOR * e_theta[i];
                }
            }
        }
        g
    }

    /// Level-set interpolation order used with element order `r`.
    pub fn levelset_order(&self, r: usize) -> usize {
        if D == 2 {
            r
        } else {
            1
        }
    }

    /// Sub-cell size for a curved level set of order `q` on spacing `h`.
    pub fn sub_h(&self, h: f64, q: usize) -> f64 {
        h.powi(q as i32) / self.sub_h0.powi(q as i32 - 1)
    }

    /// Largest pointwise residual `|−Δ_Γu + αu − f|` over `samples`
    /// surface points, with the surface Laplacian from finite differences.
    pub fn pde_residual(&self, samples: usize) -> f64 {
        // a low-discrepancy sweep keeps the check reproducible
        let golden = 0.5 * (5f64.sqrt() - 1.0);
        let mut worst = 0.0f64;
        for k in 0..samples {
            let s = (k as f64 + 0.5) / samples as f64;
            let t = (k as f64 * golden).fract();
            let (lap, y) = match self.solution {
                Manufactured::CircleCos5 => {
                    let theta = 2.0 * PI * s;
                    let g = |a: f64| (5.0 * a).cos();
                    let mut y = [0.0; D];
                    y[0] = theta.cos();
                    y[1] = theta.sin();
                    (second_derivative(g, theta, 0.05), y)
                }
                Manufactured::SphereHarmonic => {
                    let z = 2.0 * s - 1.0;
                    let a = 2.0 * PI * t;
                    let rr = (1.0 - z * z).sqrt();
                    let mut y = [0.0; D];
                    y[0] = rr * a.cos();
                    y[1] = rr * a.sin();
                    y[2] = z;
                    // degree-0 homogeneous extension: the ambient Laplacian
                    // equals the surface Laplacian on the unit sphere
                    let lap: f64 = (0..D)
                        .map(|i| {
                            second_derivative(
                                |a| {
                                    let mut p = y;
                                    p[i] += a;
                                    self.u(&p)
                                },
                                0.0,
                                0.01,
                            )
                        })
                        .sum();
                    (lap, y)
                }
                Manufactured::TorusWave => {
                    let (phi, theta) = (2.0 * PI * s, 2.0 * PI * t);
                    let r = TORUS_MINOR;
                    let w = TORUS_R + r * theta.cos();
                    let u_pp = second_derivative(|a| torus_u(a, theta), phi, 0.05);
                    let u_tt = second_derivative(|a| torus_u(phi, a), theta, 0.05);
                    let u_t = first_derivative(|a| torus_u(phi, a), theta, 0.05);
                    let lap = u_pp / (w * w) + u_tt / (r * r) - theta.sin() / (r * w) * u_t;
                    let p = torus_point(phi, theta);
                    let mut y = [0.0; D];
                    y.copy_from_slice(&p[..D]);
                    (lap, y)
                }
            };
            let res = -lap + self.alpha * self.u(&y) - self.f(&y);
            worst = worst.max(res.abs());
        }
        worst
    }
}

fn five_point_second(g: &impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-g(x + 2.0 * h) + 16.0 * g(x + h) - 30.0 * g(x) + 16.0 * g(x - h) - g(x - 2.0 * h)) / (12.0 * h * h)
}

fn five_point_first(g: &impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-g(x + 2.0 * h) + 8.0 * g(x + h) - 8.0 * g(x - h) + g(x - 2.0 * h)) / (12.0 * h)
}

/// Two Richardson steps on top of a fourth-order stencil.
fn richardson(s: impl Fn(f64) -> f64, h: f64) -> f64 {
    let (a, b, c) = (s(h), s(h / 2.0), s(h / 4.0));
    let ab = (16.0 * b - a) / 15.0;
    let bc = (16.0 * c - b) / 15.0;
    (64.0 * bc - ab) / 63.0
}

fn second_derivative(g: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    richardson(|s| five_point_second(&g, x, s), h)
}

fn first_derivative(g: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    richardson(|s| five_point_first(&g, x, s), h)
}
