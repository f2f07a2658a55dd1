use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nbfem::cli::{run_convergence, run_single, validate, LevelRange, RunConfig};
use nbfem::experiments::PresetName;
use nbfem::levelset::CoefficientMode;
use nbfem::linalg::Preconditioner;
use nbfem::Result;

#[derive(Parser)]
#[command(name = "nbfem", version, about = "Narrow-band finite elements for surface PDEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Refinement study with EOC table.
    Convergence(RunArgs),
    /// One solve on a single level.
    Single {
        #[command(flatten)]
        run: RunArgs,
        /// Level to solve on (defaults to the lower end of --levels).
        #[arg(long)]
        level: Option<u32>,
    },
    /// Check the manufactured solutions and band admissibility of every preset.
    Validate {
        /// Level range for every preset (default: each preset's experiment levels).
        #[arg(long)]
        levels: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// circle | sphere | torus | circle-p2 | circle-p3
    #[arg(long)]
    preset: Option<String>,
    /// Inclusive level range `a..b` (default: the preset's experiment levels).
    #[arg(long)]
    levels: Option<String>,
    /// Band factor: d = gamma * h.
    #[arg(long)]
    gamma: Option<f64>,
    /// exact | zero
    #[arg(long)]
    mode: Option<String>,
    /// Element order.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    volume_degree: Option<usize>,
    #[arg(long)]
    trace_degree: Option<usize>,
    #[arg(long)]
    cg_tol: Option<f64>,
    #[arg(long)]
    cg_max_iter: Option<usize>,
    /// none | jacobi | cell-block (default: cell-block for order >= 2, jacobi otherwise)
    #[arg(long)]
    preconditioner: Option<String>,
    /// Write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the table as Markdown.
    #[arg(long)]
    markdown: Option<PathBuf>,
    /// Write the solution as legacy VTK (single runs).
    #[arg(long)]
    vtk: Option<PathBuf>,
    #[arg(long, env = "NBFEM_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    sub_h0: Option<f64>,
    #[arg(long)]
    max_level: Option<u32>,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(p) = self.preset {
            cfg.preset = p.parse::<PresetName>()?;
        }
        if let Some(l) = self.levels {
            cfg.levels = Some(l.parse()?);
        }
        if let Some(m) = self.mode {
            cfg.mode = Some(m.parse::<CoefficientMode>()?);
        }
        if let Some(p) = self.preconditioner {
            cfg.preconditioner = Some(p.parse::<Preconditioner>()?);
        }
        cfg.gamma = self.gamma.or(cfg.gamma);
        cfg.order = self.order.or(cfg.order);
        cfg.volume_degree = self.volume_degree.or(cfg.volume_degree);
        cfg.trace_degree = self.trace_degree.or(cfg.trace_degree);
        cfg.cg_tol = self.cg_tol.unwrap_or(cfg.cg_tol);
        cfg.cg_max_iter = self.cg_max_iter.or(cfg.cg_max_iter);
        cfg.csv = self.csv.or(cfg.csv);
        cfg.markdown = self.markdown.or(cfg.markdown);
        cfg.vtk = self.vtk.or(cfg.vtk);
        cfg.threads = self.threads.or(cfg.threads);
        cfg.sub_h0 = self.sub_h0.or(cfg.sub_h0);
        cfg.max_level = self.max_level.or(cfg.max_level);
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Convergence(args) => {
            let report = run_convergence(&args.into_config()?)?;
            print!("{}", report.to_markdown());
            Ok(true)
        }
        Command::Single { run, level } => {
            let cfg = run.into_config()?;
            let level = match level {
                Some(l) => l,
                None => cfg.resolve()?.levels.min,
            };
            print!("{}", run_single(&cfg, level)?);
            Ok(true)
        }
        Command::Validate { levels } => {
            let levels = levels.map(|l| l.parse::<LevelRange>()).transpose()?;
            let lines = validate(levels);
            for l in &lines {
                println!(
                    "{} {:<10} residual={:.3e} tolerance={:.0e} band_admissible={}",
                    if l.passed() { "PASS" } else { "FAIL" },
                    l.preset,
                    l.residual,
                    l.tolerance,
                    l.band_admissible
                );
            }
            Ok(lines.iter().all(|l| l.passed()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
