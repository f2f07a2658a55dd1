use std::fmt::Write as _;

use serde::Serialize;

use super::{compute_eoc, ErrorNorms};
use crate::error::Result;

pub const CSV_HEADER: &str = "level,h,d,dofs,l2_gamma,eoc_l2,h1_gamma,eoc_h1,h1_band,cg_iters,seconds";

/// Results for one refinement level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRow {
    pub level: u32,
    pub h: f64,
    pub d: f64,
    pub dofs: usize,
    pub active_cells: usize,
    pub norms: ErrorNorms,
    pub eoc_l2: Option<f64>,
    pub eoc_h1: Option<f64>,
    pub eoc_band: Option<f64>,
    pub cg_iters: usize,
    pub relative_residual: f64,
    /// Lifted measure of `Γ_h`.
    pub gamma_measure: f64,
    /// Wall time for mesh, assembly, solve and error evaluation.
    pub seconds: f64,
}

/// Table of a refinement study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    /// Effective configuration, echoed in the header.
    pub config: serde_json::Value,
    pub rows: Vec<LevelRow>,
}

impl ConvergenceReport {
    /// Build a report and fill in the EOC columns.
    pub fn new(config: serde_json::Value, mut rows: Vec<LevelRow>) -> Result<Self> {
        let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let columns: [fn(&ErrorNorms) -> f64; 3] = [|n| n.l2_gamma, |n| n.h1_gamma, |n| n.h1_band];
        let mut eocs = Vec::new();
        for col in columns {
            let e: Vec<f64> = rows.iter().map(|r| col(&r.norms)).collect();
            eocs.push(compute_eoc(&e, &hs)?);
        }
        for (k, row) in rows.iter_mut().enumerate() {
            let pick = |v: &Vec<f64>| k.checked_sub(1).map(|i| v[i]);
            row.eoc_l2 = pick(&eocs[0]);
            row.eoc_h1 = pick(&eocs[1]);
            row.eoc_band = pick(&eocs[2]);
        }
        Ok(Self { config, rows })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{},{:e},{},{:e},{},{:e},{},{:.3}",
                r.level,
                r.h,
                r.d,
                r.dofs,
                r.norms.l2_gamma,
                opt(r.eoc_l2),
                r.norms.h1_gamma,
                opt(r.eoc_h1),
                r.norms.h1_band,
                r.cg_iters,
                r.seconds
            );
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "config: {}", self.config);
        s.push('\n');
        s.push_str("| level | h | d | dofs | L2(Γ) | EOC | H1(Γ) | EOC | H1(band) | EOC | CG | seconds |\n");
        s.push_str("|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n");
        let eoc = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                s,
                "| {} | {:.2e} | {:.2e} | {} | {:.2e} | {} | {:.2e} | {} | {:.2e} | {} | {} | {:.2} |",
                r.level,
                r.h,
                r.d,
                r.dofs,
                r.norms.l2_gamma,
                eoc(r.eoc_l2),
                r.norms.h1_gamma,
                eoc(r.eoc_h1),
                r.norms.h1_band,
                eoc(r.eoc_band),
                r.cg_iters,
                r.seconds
            );
        }
        s
    }
}
