use rayon::prelude::*;
use serde::Serialize;

use crate::cutgeom::{cut_region, QuadratureSpec};
use crate::error::{Error, Result};
use crate::fem::FeSpace;
use crate::levelset::SurfaceField;
use crate::linalg::small::{self, Vector};

const CHUNK: usize = 8192;

/// Error of a discrete solution in three norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    pub l2_gamma: f64,
    /// Full `H¹(Γ)` norm: `L²` part plus tangential gradient part.
    pub h1_gamma: f64,
    /// `H¹` norm over the discrete band.
    pub h1_band: f64,
}

/// Integrated quantities collected over the active cells.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Integrals {
    pub l2_gamma_sq: f64,
    pub grad_gamma_sq: f64,
    pub band_sq: f64,
    /// Lifted measure of `Γ_h`, which approximates `|Γ|`.
    pub lifted_measure: f64,
    /// Plain measure of `Γ_h`.
    pub gamma_h_measure: f64,
    /// Volume of the discrete band.
    pub band_volume: f64,
}

impl std::ops::AddAssign for Integrals {
    fn add_assign(&mut self, o: Self) {
        self.l2_gamma_sq += o.l2_gamma_sq;
        self.grad_gamma_sq += o.grad_gamma_sq;
        self.band_sq += o.band_sq;
        self.lifted_measure += o.lifted_measure;
        self.gamma_h_measure += o.gamma_h_measure;
        self.band_volume += o.band_volume;
    }
}

/// Which parts of a cell contribution to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Parts {
    pub surface: bool,
    pub band: bool,
}

/// Error integrals of `coefficients` against the exact solution `u` with
/// tangential gradient `grad_u` (both evaluated on the surface).
///
/// Surface terms use the trace quadrature on `Γ_h`, lifted to `Γ` with the
/// area element `μ |n · n_h|`. Band terms use `∇u^e = (I − φH) ∇_Γu(p(x))`.
pub fn integrate_errors<const D: usize>(
    space: &FeSpace<D>,
    coefficients: &[f64],
    surface: &SurfaceField<D>,
    quad: &QuadratureSpec,
    u: impl Fn(&Vector<D>) -> f64 + Sync,
    grad_u: impl Fn(&Vector<D>) -> Vector<D> + Sync,
    parts: Parts,
) -> Result<Integrals> {
    if coefficients.len() != space.num_dofs() {
        return Err(Error::DimensionMismatch { expected: space.num_dofs(), got: coefficients.len() });
    }
    let cell = |pos: usize| -> Result<Integrals> {
        let region = cut_region(space.active(), pos, quad)?;
        let map = space.cell_map(pos);
        let mut acc = Integrals::default();
        if parts.surface {
            for tp in &region.trace_quad {
                let g = surface.geometry(&tp.x)?;
                let y = g.closest_point(&tp.x);
                let mut ph = [[0.0; D]; D];
                for i in 0..D {
                    for j in 0..D {
                        ph[i][j] = (if i == j { 1.0 } else { 0.0 }) - g.phi * g.hessian[i][j];
                    }
                }
                let mu = small::det(&ph);
                let grad_e = small::mat_vec(&ph, &grad_u(&y));
                let lambda = map.barycentric(&tp.x);
                let (uh, guh) = space.evaluate_local(coefficients, pos, &map, &lambda);
                let w = tp.weight * mu * small::dot(&g.normal, &tp.normal).abs();
                let diff = small::sub(&grad_e, &guh);
                let tang = small::mat_vec(&g.projector(), &diff);
                acc.l2_gamma_sq += w * (u(&y) - uh).powi(2);
                acc.grad_gamma_sq += w * small::dot(&tang, &tang);
                acc.lifted_measure += w;
                acc.gamma_h_measure += tp.weight;
            }
        }
        if parts.band {
            for vp in &region.volume_quad {
                let g = surface.geometry(&vp.x)?;
                let y = g.closest_point(&vp.x);
                let mut ph = [[0.0; D]; D];
                for i in 0..D {
                    for j in 0..D {
                        ph[i][j] = (if i == j { 1.0 } else { 0.0 }) - g.phi * g.hessian[i][j];
                    }
                }
                let grad_e = small::mat_vec(&ph, &grad_u(&y));
                let lambda = map.barycentric(&vp.x);
                let (uh, guh) = space.evaluate_local(coefficients, pos, &map, &lambda);
                let diff = small::sub(&grad_e, &guh);
                acc.band_sq += vp.weight * ((u(&y) - uh).powi(2) + small::dot(&diff, &diff));
                acc.band_volume += vp.weight;
            }
        }
        Ok(acc)
    };

    let mut total = Integrals::default();
    let n = space.num_cells();
    for start in (0..n).step_by(CHUNK) {
        let end = (start + CHUNK).min(n);
        let local: Vec<Result<Integrals>> = (start..end).into_par_iter().map(cell).collect();
        // canonical cell order for the reduction
        for r in local {
            total += r?;
        }
    }
    if parts.surface && total.gamma_h_measure <= 0.0 {
        return Err(Error::NoTraceCells);
    }
    Ok(total)
}

/// `L²(Γ)`, `H¹(Γ)` and `H¹(Ω_h)` errors in one pass.
pub fn error_norms<const D: usize>(
    space: &FeSpace<D>,
    coefficients: &[f64],
    surface: &SurfaceField<D>,
    quad: &QuadratureSpec,
    u: impl Fn(&Vector<D>) -> f64 + Sync,
    grad_u: impl Fn(&Vector<D>) -> Vector<D> + Sync,
) -> Result<(ErrorNorms, Integrals)> {
    let i = integrate_errors(space, coefficients, surface, quad, u, grad_u, Parts { surface: true, band: true })?;
    let norms = ErrorNorms {
        l2_gamma: i.l2_gamma_sq.sqrt(),
        h1_gamma: (i.l2_gamma_sq + i.grad_gamma_sq).sqrt(),
        h1_band: i.band_sq.sqrt(),
    };
    Ok((norms, i))
}

/// Surface error norms; `h1_band` is left at zero.
pub fn surface_errors<const D: usize>(
    space: &FeSpace<D>,
    coefficients: &[f64],
    surface: &SurfaceField<D>,
    quad: &QuadratureSpec,
    u: impl Fn(&Vector<D>) -> f64 + Sync,
    grad_u: impl Fn(&Vector<D>) -> Vector<D> + Sync,
) -> Result<ErrorNorms> {
    let i = integrate_errors(space, coefficients, surface, quad, u, grad_u, Parts { surface: true, band: false })?;
    Ok(ErrorNorms { l2_gamma: i.l2_gamma_sq.sqrt(), h1_gamma: (i.l2_gamma_sq + i.grad_gamma_sq).sqrt(), h1_band: 0.0 })
}

/// `‖u^e − u_h‖_{H¹(Ω_h)}`.
pub fn band_h1_error<const D: usize>(
    space: &FeSpace<D>,
    coefficients: &[f64],
    surface: &SurfaceField<D>,
    quad: &QuadratureSpec,
    u: impl Fn(&Vector<D>) -> f64 + Sync,
    grad_u: impl Fn(&Vector<D>) -> Vector<D> + Sync,
) -> Result<f64> {
    let i = integrate_errors(space, coefficients, surface, quad, u, grad_u, Parts { surface: false, band: true })?;
    Ok(i.band_sq.sqrt())
}

/// `eoc_k = log(e_{k-1}/e_k) / log(h_{k-1}/h_k)`, one entry per consecutive
/// pair.
pub fn compute_eoc(errors: &[f64], hs: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != hs.len() {
        return Err(Error::DimensionMismatch { expected: hs.len(), got: errors.len() });
    }
    if let Some(&bad) = errors.iter().chain(hs).find(|&&e| !(e > 0.0)) {
        return Err(Error::NonPositiveError(bad));
    }
    Ok(errors.windows(2).zip(hs.windows(2)).map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln()).collect())
}
