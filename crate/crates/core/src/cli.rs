//! Run configuration and the drivers behind the `nbfem` binary.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cutgeom::{CutSettings, QuadratureSpec, DEFAULT_MAX_SUBCELLS};
use crate::error::{Error, Result};
use crate::experiments::{preset_circle, preset_circle_highorder, preset_sphere, preset_torus, Preset, PresetName, SUB_H0};
use crate::fem::{assemble, build_space, FeSpace};
use crate::levelset::{BandSpec, CoefficientMode};
use crate::linalg::{cg_solve_with, CellBlocks, CgOptions, Preconditioner, SolveStats};
use crate::mesh::{h_law, interpolate_levelset, select_active_cells, BackgroundMesh, DEFAULT_MAX_CELLS};
use crate::postprocess::{error_norms, export_vtk, ConvergenceReport, ErrorNorms, Integrals, LevelRow};
use crate::quadrature::MAX_SIMPLEX_DEGREE;

/// Inclusive range of refinement levels, written `a..b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LevelRange {
    pub min: u32,
    pub max: u32,
}

impl LevelRange {
    pub fn iter(self) -> impl Iterator<Item = u32> {
        self.min..=self.max
    }
}

impl FromStr for LevelRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("levels must look like 'a..b' or 'a', got '{s}'"));
        let (a, b) = match s.split_once("..") {
            Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
            None => (s, s),
        };
        let min = a.trim().parse().map_err(|_| bad())?;
        let max = b.trim().parse().map_err(|_| bad())?;
        if min > max {
            return Err(Error::Config(format!("empty level range {min}..{max}")));
        }
        Ok(Self { min, max })
    }
}

impl TryFrom<String> for LevelRange {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LevelRange> for String {
    fn from(r: LevelRange) -> String {
        r.to_string()
    }
}

impl fmt::Display for LevelRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.min, self.max)
    }
}

/// User-facing configuration. Unset options fall back to preset defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preset: PresetName,
    /// Defaults to the preset's experiment levels.
    pub levels: Option<LevelRange>,
    pub gamma: Option<f64>,
    pub mode: Option<CoefficientMode>,
    pub order: Option<usize>,
    pub volume_degree: Option<usize>,
    pub trace_degree: Option<usize>,
    pub cg_tol: f64,
    pub cg_max_iter: Option<usize>,
    /// Defaults to cell blocks for order >= 2 and Jacobi otherwise.
    pub preconditioner: Option<Preconditioner>,
    pub csv: Option<PathBuf>,
    pub markdown: Option<PathBuf>,
    pub vtk: Option<PathBuf>,
    pub threads: Option<usize>,
    /// Reference size `h0` in `h' = h^q / h0^(q-1)`.
    pub sub_h0: Option<f64>,
    pub max_level: Option<u32>,
    pub max_cells: u64,
    pub max_active_cells: usize,
    pub max_subcells: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: PresetName::Circle,
            levels: None,
            gamma: None,
            mode: None,
            order: None,
            volume_degree: None,
            trace_degree: None,
            cg_tol: 1e-12,
            cg_max_iter: None,
            preconditioner: None,
            csv: None,
            markdown: None,
            vtk: None,
            threads: None,
            sub_h0: None,
            max_level: None,
            max_cells: DEFAULT_MAX_CELLS,
            max_active_cells: 50_000_000,
            max_subcells: DEFAULT_MAX_SUBCELLS,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fill in preset defaults and check everything that can be checked
    /// without allocating a mesh.
    pub fn resolve(&self) -> Result<Resolved> {
        let defaults = PresetDefaults::of(self.preset);
        let dim = self.preset.dim();
        let order = self.order.unwrap_or(defaults.order);
        let gamma = self.gamma.unwrap_or(defaults.gamma);
        let mode = self.mode.unwrap_or(CoefficientMode::ExactHessian);
        let volume_degree = self.volume_degree.unwrap_or(2 * order);
        let trace_degree = self.trace_degree.unwrap_or(2 * order + 2);
        let max_level = self.max_level.unwrap_or(if dim == 2 { 10 } else { 5 });
        let sub_h0 = self.sub_h0.unwrap_or(SUB_H0);
        let levels = self.levels.unwrap_or_else(|| experiment_levels(self.preset));

        if !(1..=3).contains(&order) || (dim == 3 && order > 1) {
            return Err(Error::Unsupported(format!("element order {order} in {dim}D (supported: 1..=3 in 2D, 1 in 3D)")));
        }
        if levels.max > max_level {
            return Err(Error::Config(format!("level {} exceeds the cap of {max_level}", levels.max)));
        }
        if volume_degree > MAX_SIMPLEX_DEGREE || (dim == 3 && trace_degree > MAX_SIMPLEX_DEGREE) {
            return Err(Error::UnsupportedDegree(volume_degree.max(trace_degree)));
        }
        if volume_degree == 0 || trace_degree == 0 {
            return Err(Error::Config("quadrature degrees must be positive".into()));
        }
        if !(self.cg_tol > 0.0) {
            return Err(Error::Config(format!("cg tolerance must be positive, got {}", self.cg_tol)));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("thread count must be at least 1".into()));
        }
        if !(sub_h0 > 0.0) {
            return Err(Error::Config(format!("sub_h0 must be positive, got {sub_h0}")));
        }
        // band admissibility at every requested level
        let surface = defaults.surface;
        for level in levels.iter() {
            let h = h_law(dim, level);
            match surface {
                SurfaceRef::D2(s) => BandSpec::new(&s, gamma, h)?,
                SurfaceRef::D3(s) => BandSpec::new(&s, gamma, h)?,
            };
        }
        Ok(Resolved {
            preset: self.preset,
            dim,
            levels,
            gamma,
            mode,
            order,
            volume_degree,
            trace_degree,
            cg_tol: self.cg_tol,
            cg_max_iter: self.cg_max_iter,
            preconditioner: self.preconditioner.unwrap_or(if order >= 2 {
                Preconditioner::CellBlock
            } else {
                Preconditioner::Jacobi
            }),
            threads: self.threads,
            sub_h0,
            max_cells: self.max_cells,
            max_active_cells: self.max_active_cells,
            max_subcells: self.max_subcells,
        })
    }
}

#[derive(Clone, Copy)]
enum SurfaceRef {
    D2(crate::levelset::SurfaceField<2>),
    D3(crate::levelset::SurfaceField<3>),
}

struct PresetDefaults {
    order: usize,
    gamma: f64,
    surface: SurfaceRef,
}

impl PresetDefaults {
    fn of(name: PresetName) -> Self {
        match name {
            PresetName::Sphere | PresetName::Torus => {
                let p = if name == PresetName::Sphere { preset_sphere() } else { preset_torus() };
                Self { order: p.default_order, gamma: p.default_gamma, surface: SurfaceRef::D3(p.surface) }
            }
            _ => {
                let p = preset_2d(name);
                Self { order: p.default_order, gamma: p.default_gamma, surface: SurfaceRef::D2(p.surface) }
            }
        }
    }
}

/// Levels of the refinement study each preset reproduces.
pub fn experiment_levels(name: PresetName) -> LevelRange {
    match name {
        PresetName::Circle => LevelRange { min: 2, max: 6 },
        PresetName::Sphere => LevelRange { min: 0, max: 3 },
        PresetName::Torus => LevelRange { min: 1, max: 3 },
        PresetName::CircleP2 | PresetName::CircleP3 => LevelRange { min: 1, max: 4 },
    }
}

fn preset_2d(name: PresetName) -> Preset<2> {
    match name {
        PresetName::CircleP2 => preset_circle_highorder(2).expect("p2 preset"),
        PresetName::CircleP3 => preset_circle_highorder(3).expect("p3 preset"),
        _ => preset_circle(),
    }
}

/// Fully resolved configuration; this is what reports echo.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub preset: PresetName,
    pub dim: usize,
    pub levels: LevelRange,
    pub gamma: f64,
    pub mode: CoefficientMode,
    pub order: usize,
    pub volume_degree: usize,
    pub trace_degree: usize,
    pub cg_tol: f64,
    pub cg_max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
    pub threads: Option<usize>,
    pub sub_h0: f64,
    pub max_cells: u64,
    pub max_active_cells: usize,
    pub max_subcells: usize,
}

impl Resolved {
    fn cg_options(&self) -> CgOptions {
        CgOptions { tol: self.cg_tol, max_iter: self.cg_max_iter, preconditioner: self.preconditioner }
    }

    /// Run `f` on a pool with the configured number of threads.
    fn install<T: Send>(&self, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
        match self.threads {
            None => f(),
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::ResourceLimit(format!("cannot start {n} threads: {e}")))?
                .install(f),
        }
    }
}

/// Discrete solution and diagnostics on one level.
pub struct LevelSolution<const D: usize> {
    pub space: FeSpace<D>,
    pub coefficients: Vec<f64>,
    pub norms: ErrorNorms,
    pub integrals: Integrals,
    pub stats: SolveStats,
    pub row: LevelRow,
}

/// Mesh, assemble, solve and measure on one level.
pub fn solve_level<const D: usize>(preset: &Preset<D>, cfg: &Resolved, level: u32) -> Result<LevelSolution<D>> {
    let start = Instant::now();
    let surface = preset.surface;
    let mesh = BackgroundMesh::build(preset.bbox, level, cfg.max_cells)?;
    let h = mesh.h();
    let band = BandSpec::new(&surface, cfg.gamma, h)?;
    let q = preset.levelset_order(cfg.order);
    let phi_h = interpolate_levelset(&surface, q)?;
    let sub_h = if q > 1 { preset.sub_h(h, q) } else { f64::INFINITY };
    let settings = CutSettings { d: band.d, sub_h, max_subcells: cfg.max_subcells };
    let active = select_active_cells(&mesh, &phi_h, &settings, cfg.max_active_cells)?;
    let active_cells = active.len();
    let space = build_space(active, cfg.order)?;
    let quad = QuadratureSpec::new::<D>(cfg.volume_degree, cfg.trace_degree)?;
    let system = assemble(&space, &surface, cfg.mode, preset.alpha, |y| preset.f(y), &quad)?;
    let blocks = match cfg.preconditioner {
        Preconditioner::CellBlock => {
            Some(CellBlocks::new(&system.matrix, (0..space.num_cells()).map(|c| space.cell_dofs(c)))?)
        }
        _ => None,
    };
    let outcome =
        cg_solve_with(&system.matrix, &system.rhs, None, &cfg.cg_options(), blocks.as_ref(), |_, _| {})?.into_result()?;
    let (norms, integrals) =
        error_norms(&space, &outcome.x, &surface, &quad, |y| preset.u(y), |y| preset.grad_u(y))?;
    let row = LevelRow {
        level,
        h,
        d: band.d,
        dofs: space.num_dofs(),
        active_cells,
        norms,
        eoc_l2: None,
        eoc_h1: None,
        eoc_band: None,
        cg_iters: outcome.stats.iterations,
        relative_residual: outcome.stats.relative_residual,
        gamma_measure: integrals.lifted_measure,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok(LevelSolution { space, coefficients: outcome.x, norms, integrals, stats: outcome.stats, row })
}

fn sweep<const D: usize>(preset: &Preset<D>, cfg: &Resolved) -> Result<Vec<LevelRow>> {
    cfg.levels.iter().map(|level| solve_level(preset, cfg, level).map(|s| s.row)).collect()
}

/// Refinement study over the configured levels.
pub fn run_convergence(config: &RunConfig) -> Result<ConvergenceReport> {
    let cfg = config.resolve()?;
    let rows = cfg.install(|| match cfg.preset {
        PresetName::Sphere => sweep(&preset_sphere(), &cfg),
        PresetName::Torus => sweep(&preset_torus(), &cfg),
        name => sweep(&with_h0(preset_2d(name), cfg.sub_h0), &cfg),
    })?;
    let echo = serde_json::to_value(&cfg).map_err(|e| Error::Config(e.to_string()))?;
    let report = ConvergenceReport::new(echo, rows)?;
    if let Some(path) = &config.csv {
        write_text(path, &report.to_csv())?;
    }
    if let Some(path) = &config.markdown {
        write_text(path, &report.to_markdown())?;
    }
    Ok(report)
}

fn with_h0<const D: usize>(mut p: Preset<D>, h0: f64) -> Preset<D> {
    p.sub_h0 = h0;
    p
}

/// Summary of a single solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleReport {
    pub config: serde_json::Value,
    pub row: LevelRow,
    pub stats: SolveStats,
    pub vtk: Option<PathBuf>,
}

impl fmt::Display for SingleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.row;
        writeln!(f, "config: {}", self.config)?;
        writeln!(f, "level={} h={:e} d={:e} dofs={} active_cells={}", r.level, r.h, r.d, r.dofs, r.active_cells)?;
        writeln!(
            f,
            "l2_gamma={:.6e} h1_gamma={:.6e} h1_band={:.6e} gamma_measure={:.12}",
            r.norms.l2_gamma, r.norms.h1_gamma, r.norms.h1_band, r.gamma_measure
        )?;
        writeln!(
            f,
            "cg_iters={} relative_residual={:.3e} converged={} seconds={:.3}",
            self.stats.iterations, self.stats.relative_residual, self.stats.converged, r.seconds
        )?;
        if let Some(p) = &self.vtk {
            writeln!(f, "vtk={}", p.display())?;
        }
        Ok(())
    }
}

fn single<const D: usize>(preset: &Preset<D>, cfg: &Resolved, level: u32, vtk: Option<&Path>) -> Result<(LevelRow, SolveStats)> {
    let s = solve_level(preset, cfg, level)?;
    if let Some(path) = vtk {
        export_vtk(&s.space, &s.coefficients, path)?;
    }
    Ok((s.row, s.stats))
}

/// One solve at `level`, with optional VTK output.
pub fn run_single(config: &RunConfig, level: u32) -> Result<SingleReport> {
    let mut config = config.clone();
    config.levels = Some(LevelRange { min: level, max: level });
    let cfg = config.resolve()?;
    let vtk = config.vtk.as_deref();
    let (row, stats) = cfg.install(|| match cfg.preset {
        PresetName::Sphere => single(&preset_sphere(), &cfg, level, vtk),
        PresetName::Torus => single(&preset_torus(), &cfg, level, vtk),
        name => single(&with_h0(preset_2d(name), cfg.sub_h0), &cfg, level, vtk),
    })?;
    let echo = serde_json::to_value(&cfg).map_err(|e| Error::Config(e.to_string()))?;
    Ok(SingleReport { config: echo, row, stats, vtk: config.vtk.clone() })
}

/// Outcome of the manufactured-solution residual checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationLine {
    pub preset: PresetName,
    pub residual: f64,
    pub tolerance: f64,
    pub band_admissible: bool,
}

impl ValidationLine {
    pub fn passed(&self) -> bool {
        self.residual < self.tolerance && self.band_admissible
    }
}

/// Check every preset: PDE residual of the exact data and band
/// admissibility of the default band factor on `levels`, or on the preset's
/// experiment levels if `None`.
pub fn validate(levels: Option<LevelRange>) -> Vec<ValidationLine> {
    PresetName::ALL
        .into_iter()
        .map(|name| {
            let cfg = RunConfig { preset: name, levels, ..RunConfig::default() };
            let band_admissible = cfg.resolve().is_ok();
            let (residual, tolerance) = match name {
                PresetName::Sphere => (preset_sphere().pde_residual(1000), 1e-6),
                PresetName::Torus => (preset_torus().pde_residual(1000), 1e-5),
                _ => (preset_2d(name).pde_residual(1000), 1e-10),
            };
            ValidationLine { preset: name, residual, tolerance, band_admissible }
        })
        .collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
