//! Analytic signed-distance geometry for the built-in surfaces.
//!
//! Every quantity the extended equation needs is evaluated pointwise from
//! closed-form expressions: distance, normal, Hessian, closest point and the
//! coefficient pair `(mu (I - phi H)^-2, mu)` with `mu = det(I - phi H)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::small::{self, Matrix, Vector};

/// Relative slack applied to the admissibility radius.
const BAND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SurfaceKind {
    Circle { radius: f64 },
    Sphere { radius: f64 },
    Torus { major: f64, minor: f64 },
}

impl SurfaceKind {
    pub fn dim(&self) -> usize {
        match self {
            SurfaceKind::Circle { .. } => 2,
            SurfaceKind::Sphere { .. } | SurfaceKind::Torus { .. } => 3,
        }
    }

    /// `max over the surface of |k1| + |k2|`.
    pub fn curvature_bound(&self) -> f64 {
        match *self {
            SurfaceKind::Circle { radius } => 1.0 / radius,
            SurfaceKind::Sphere { radius } => 2.0 / radius,
            SurfaceKind::Torus { major, minor } => 1.0 / minor + 1.0 / (major - minor),
        }
    }
}

/// A closed surface in `R^D` described by its signed distance function
/// (negative inside).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceField<const D: usize> {
    kind: SurfaceKind,
    curvature_bound: f64,
}

/// Distance, normal and Hessian at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointGeometry<const D: usize> {
    pub phi: f64,
    pub normal: Vector<D>,
    pub hessian: Matrix<D>,
}

impl<const D: usize> PointGeometry<D> {
    pub fn closest_point(&self, x: &Vector<D>) -> Vector<D> {
        std::array::from_fn(|i| x[i] - self.phi * self.normal[i])
    }

    /// `P = I - n n^T`
    pub fn projector(&self) -> Matrix<D> {
        small::mat_add_scaled(&small::identity(), &small::outer(&self.normal, &self.normal), -1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoefficientMode {
    #[serde(rename = "exact")]
    ExactHessian,
    #[serde(rename = "zero")]
    ZeroHessian,
}

impl std::str::FromStr for CoefficientMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(CoefficientMode::ExactHessian),
            "zero" => Ok(CoefficientMode::ZeroHessian),
            other => Err(Error::Config(format!("unknown coefficient mode '{other}' (expected exact|zero)"))),
        }
    }
}

impl std::fmt::Display for CoefficientMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CoefficientMode::ExactHessian => "exact",
            CoefficientMode::ZeroHessian => "zero",
        })
    }
}

/// Diffusion tensor (with `mu` folded in) and the scalar `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficient<const D: usize> {
    pub tensor: Matrix<D>,
    pub mu: f64,
}

/// Band half-width `d = gamma h`, checked against the curvature bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSpec {
    pub gamma: f64,
    pub d: f64,
}

impl BandSpec {
    pub fn new<const D: usize>(surface: &SurfaceField<D>, gamma: f64, h: f64) -> Result<Self> {
        if !(gamma > 0.0) || !(h > 0.0) {
            return Err(Error::Config(format!("band factor and mesh size must be positive (gamma={gamma}, h={h})")));
        }
        let d = gamma * h;
        if !surface.band_admissible(d) {
            return Err(Error::InadmissibleBand {
                d,
                curvature_bound: surface.curvature_bound(),
                max_d: 0.5 / surface.curvature_bound(),
            });
        }
        Ok(Self { gamma, d })
    }
}

impl SurfaceField<2> {
    pub fn circle(radius: f64) -> Result<Self> {
        Self::new(SurfaceKind::Circle { radius })
    }
}

impl SurfaceField<3> {
    pub fn sphere(radius: f64) -> Result<Self> {
        Self::new(SurfaceKind::Sphere { radius })
    }

    pub fn torus(major: f64, minor: f64) -> Result<Self> {
        Self::new(SurfaceKind::Torus { major, minor })
    }
}

impl<const D: usize> SurfaceField<D> {
    pub fn new(kind: SurfaceKind) -> Result<Self> {
        if kind.dim() != D {
            return Err(Error::DimensionMismatch { expected: kind.dim(), got: D });
        }
        let valid = match kind {
            SurfaceKind::Circle { radius } | SurfaceKind::Sphere { radius } => radius > 0.0,
            SurfaceKind::Torus { major, minor } => minor > 0.0 && major > minor,
        };
        if !valid {
            return Err(Error::Config(format!("invalid surface parameters {kind:?}")));
        }
        Ok(Self { kind, curvature_bound: kind.curvature_bound() })
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn curvature_bound(&self) -> f64 {
        self.curvature_bound
    }

    /// Reach of the surface: points with `|phi| < admissible_radius()` have
    /// a unique closest point. This is the inverse of the largest principal
    /// curvature, so it is never smaller than `1 / curvature_bound`.
    pub fn admissible_radius(&self) -> f64 {
        match self.kind {
            SurfaceKind::Circle { radius } | SurfaceKind::Sphere { radius } => radius,
            SurfaceKind::Torus { major, minor } => minor.min(major - minor),
        }
    }

    /// True iff `d * curvature_bound <= 1/2`.
    pub fn band_admissible(&self, d: f64) -> bool {
        d > 0.0 && d * self.curvature_bound <= 0.5
    }

    /// Length / area of the surface.
    pub fn measure(&self) -> f64 {
        use std::f64::consts::PI;
        match self.kind {
            SurfaceKind::Circle { radius } => 2.0 * PI * radius,
            SurfaceKind::Sphere { radius } => 4.0 * PI * radius * radius,
            SurfaceKind::Torus { major, minor } => 4.0 * PI * PI * major * minor,
        }
    }

    pub fn signed_distance(&self, x: &Vector<D>) -> f64 {
        match self.kind {
            SurfaceKind::Circle { radius } | SurfaceKind::Sphere { radius } => small::norm(x) - radius,
            SurfaceKind::Torus { major, minor } => {
                let rho = x[0].hypot(x[1]);
                (rho - major).hypot(x[2]) - minor
            }
        }
    }

    fn check_band(&self, phi: f64) -> Result<()> {
        let radius = self.admissible_radius();
        if phi.abs() < radius * (1.0 + BAND_SLACK) {
            Ok(())
        } else {
            Err(Error::OutsideBand { distance: phi, radius })
        }
    }

    /// Distance, normal and Hessian in one evaluation.
    pub fn geometry(&self, x: &Vector<D>) -> Result<PointGeometry<D>> {
        let phi = self.signed_distance(x);
        self.check_band(phi)?;
        match self.kind {
            SurfaceKind::Circle { .. } | SurfaceKind::Sphere { .. } => {
                let r = small::norm(x);
                if r == 0.0 {
                    return Err(Error::OutsideBand { distance: phi, radius: self.admissible_radius() });
                }
                let normal = small::scale(x, 1.0 / r);
                // H = (I - n n^T) / |x|
                let hessian = std::array::from_fn(|i| {
                    std::array::from_fn(|j| ((if i == j { 1.0 } else { 0.0 }) - normal[i] * normal[j]) / r)
                });
                Ok(PointGeometry { phi, normal, hessian })
            }
            SurfaceKind::Torus { major, .. } => {
                let rho = x[0].hypot(x[1]);
                let (cos_a, sin_a) = (x[0] / rho, x[1] / rho);
                let w = [(rho - major) * cos_a, (rho - major) * sin_a, x[2]];
                let q = (rho - major).hypot(x[2]);
                let normal: Vector<D> = std::array::from_fn(|i| w[i] / q);
                let e_theta = [-sin_a, cos_a, 0.0];
                // H = (I - n n^T - (R / rho) e_theta e_theta^T) / q
                let hessian = std::array::from_fn(|i| {
                    std::array::from_fn(|j| {
                        ((if i == j { 1.0 } else { 0.0 })
                            - normal[i] * normal[j]
                            - major / rho * e_theta[i] * e_theta[j])
                            / q
                    })
                });
                Ok(PointGeometry { phi, normal, hessian })
            }
        }
    }

    pub fn normal(&self, x: &Vector<D>) -> Result<Vector<D>> {
        Ok(self.geometry(x)?.normal)
    }

    pub fn hessian(&self, x: &Vector<D>) -> Result<Matrix<D>> {
        Ok(self.geometry(x)?.hessian)
    }

    pub fn projector(&self, x: &Vector<D>) -> Result<Matrix<D>> {
        Ok(self.geometry(x)?.projector())
    }

    /// `p(x) = x - phi(x) n(x)`
    pub fn closest_point(&self, x: &Vector<D>) -> Result<Vector<D>> {
        Ok(self.geometry(x)?.closest_point(x))
    }

    /// Extension of `g` constant along normals: `g(p(x))`.
    pub fn normal_extend(&self, g: impl Fn(&Vector<D>) -> f64, x: &Vector<D>) -> Result<f64> {
        Ok(g(&self.closest_point(x)?))
    }

    pub fn coefficient(&self, mode: CoefficientMode, x: &Vector<D>) -> Result<Coefficient<D>> {
        match mode {
            CoefficientMode::ZeroHessian => {
                self.check_band(self.signed_distance(x))?;
                Ok(Coefficient { tensor: small::identity(), mu: 1.0 })
            }
            CoefficientMode::ExactHessian => Ok(coefficient_from(&self.geometry(x)?)),
        }
    }
}

/// `(mu (I - phi H)^-2, mu)` for precomputed geometry.
pub fn coefficient_from<const D: usize>(g: &PointGeometry<D>) -> Coefficient<D> {
    let m = small::mat_add_scaled(&small::identity(), &g.hessian, -g.phi);
    let mu = small::det(&m);
    // spectrum of I - phi H is bounded below by 1/2 inside admissible bands
    let inv = small::inverse(&m).expect("I - phi H is invertible inside the band");
    let tensor = small::mat_scale(&small::mat_mul(&inv, &inv), mu);
    Coefficient { tensor, mu }
}
