use serde::{Deserialize, Serialize};

use super::{CellBlocks, SparseSym};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preconditioner {
    None,
    Jacobi,
    /// Symmetric multiplicative Schwarz over overlapping cell blocks, see
    /// [`CellBlocks`]. The blocks come from the caller.
    CellBlock,
}

impl std::str::FromStr for Preconditioner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "jacobi" => Ok(Self::Jacobi),
            "cell-block" => Ok(Self::CellBlock),
            other => Err(Error::Config(format!("unknown preconditioner '{other}'"))),
        }
    }
}

enum Applied<'a> {
    Diagonal(Vec<f64>),
    Blocks(&'a CellBlocks),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Relative residual target `||b - Mx|| <= tol ||b||`.
    pub tol: f64,
    /// `None` selects `50 sqrt(n) + 1000`.
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: None, preconditioner: Preconditioner::Jacobi }
    }
}

pub fn default_max_iter(n: usize) -> usize {
    50 * (n as f64).sqrt().ceil() as usize + 1000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub stats: SolveStats,
}

impl CgOutcome {
    /// Turn a non-converged outcome into [`Error::NotConverged`].
    pub fn into_result(self) -> Result<Self> {
        if self.stats.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                iterations: self.stats.iterations,
                residual: self.stats.relative_residual,
            })
        }
    }
}

// Plain sequential sums keep the reduction order fixed.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn cg_solve(m: &SparseSym, b: &[f64], opts: &CgOptions) -> Result<CgOutcome> {
    cg_solve_monitored(m, b, None, opts, |_, _| {})
}

/// CG started from `x0`.
pub fn cg_solve_from(m: &SparseSym, b: &[f64], x0: &[f64], opts: &CgOptions) -> Result<CgOutcome> {
    cg_solve_monitored(m, b, Some(x0), opts, |_, _| {})
}

pub fn cg_solve_monitored(
    m: &SparseSym,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &CgOptions,
    monitor: impl FnMut(usize, &[f64]),
) -> Result<CgOutcome> {
    cg_solve_with(m, b, x0, opts, None, monitor)
}

/// Preconditioned CG from `x0` (zero if `None`). `monitor` sees every
/// iterate. The relative residual is measured against `b`. `blocks` is only
/// read by [`Preconditioner::CellBlock`], which requires it.
///
/// A run that hits `max_iter` is not an error here: the best iterate comes
/// back with `converged == false`.
pub fn cg_solve_with(
    m: &SparseSym,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &CgOptions,
    blocks: Option<&CellBlocks>,
    mut monitor: impl FnMut(usize, &[f64]),
) -> Result<CgOutcome> {
    let n = m.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!("CG tolerance must be positive, got {}", opts.tol)));
    }
    let max_iter = opts.max_iter.unwrap_or_else(|| default_max_iter(n));

    let prec = match opts.preconditioner {
        Preconditioner::None => Applied::Diagonal(vec![1.0; n]),
        Preconditioner::Jacobi => {
            let diag = m.diagonal();
            if let Some(&bad) = diag.iter().find(|d| !(**d > 0.0)) {
                return Err(Error::BreakdownNonSpd(bad));
            }
            Applied::Diagonal(diag.iter().map(|d| 1.0 / d).collect())
        }
        Preconditioner::CellBlock => match blocks {
            Some(bl) if bl.dim() == n => Applied::Blocks(bl),
            Some(bl) => return Err(Error::DimensionMismatch { expected: n, got: bl.dim() }),
            None => return Err(Error::Config("the cell-block preconditioner needs index blocks".into())),
        },
    };
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            stats: SolveStats { iterations: 0, relative_residual: 0.0, converged: true },
        });
    }

    let mut r = b.to_vec();
    let mut x = match x0 {
        None => vec![0.0; n],
        Some(x0) if x0.len() != n => return Err(Error::DimensionMismatch { expected: n, got: x0.len() }),
        Some(x0) => {
            let mut ax = vec![0.0; n];
            m.matvec_into(x0, &mut ax);
            for (ri, ai) in r.iter_mut().zip(&ax) {
                *ri -= ai;
            }
            x0.to_vec()
        }
    };
    let rel0 = dot(&r, &r).sqrt() / b_norm;
    if rel0 <= opts.tol {
        return Ok(CgOutcome { x, stats: SolveStats { iterations: 0, relative_residual: rel0, converged: true } });
    }
    let mut z = vec![0.0; n];
    match &prec {
        Applied::Diagonal(inv) => z.iter_mut().zip(&r).zip(inv).for_each(|((zi, ri), di)| *zi = ri * di),
        Applied::Blocks(bl) => bl.apply(m, &r, &mut z),
    }
    let mut p = z.clone();
    let mut rz = dot(&r, &p);
    let mut q = vec![0.0; n];

    let mut best_x = x.clone();
    let mut best_rel = rel0;

    for iter in 1..=max_iter {
        let pq = m.matvec_dot(&p, &mut q);
        if !(pq > 0.0) {
            return Err(Error::BreakdownNonSpd(pq));
        }
        let alpha = rz / pq;
        let (mut rr, mut rz_new) = (0.0, 0.0);
        match &prec {
            Applied::Diagonal(inv) => {
                for (((((xi, ri), zi), &pi), &qi), &di) in
                    x.iter_mut().zip(r.iter_mut()).zip(z.iter_mut()).zip(&p).zip(&q).zip(inv)
                {
                    *xi += alpha * pi;
                    *ri -= alpha * qi;
                    *zi = di * *ri;
                    rr += *ri * *ri;
                    rz_new += *ri * *zi;
                }
            }
            Applied::Blocks(bl) => {
                for (((xi, ri), &pi), &qi) in x.iter_mut().zip(r.iter_mut()).zip(&p).zip(&q) {
                    *xi += alpha * pi;
                    *ri -= alpha * qi;
                    rr += *ri * *ri;
                }
                bl.apply(m, &r, &mut z);
                rz_new = dot(&r, &z);
            }
        }
        monitor(iter, &x);
        let rel = rr.sqrt() / b_norm;
        if rel <= opts.tol {
            return Ok(CgOutcome {
                x,
                stats: SolveStats { iterations: iter, relative_residual: rel, converged: true },
            });
        }
        if rel < best_rel {
            best_rel = rel;
            best_x.copy_from_slice(&x);
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, &zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Ok(CgOutcome {
        x: best_x,
        stats: SolveStats { iterations: max_iter, relative_residual: best_rel, converged: false },
    })
}
