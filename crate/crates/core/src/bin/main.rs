//! Batch driver for convergence studies, geometry diagnostics, single solves
//! and patch tests.
//!
//! Exit codes: 0 success, 1 configuration error, 2 failed level or failed
//! check.

use clap::{Args, Parser, Subcommand};
use cutiso::analysis::{
    disk_case, error_norms, log_slope, run_convergence, run_geometry, solve_case_level,
    square_patch_case, ManufacturedCase, RunConfig,
};
use cutiso::io::{
    write_interface_csv, write_interface_vtk, write_matrix_market, write_mesh_vtk, write_report,
    write_vtk,
};
use cutiso::isomap::SearchVariant;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "cutiso", version, about = "High-order unfitted interface FEM driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Refinement study with error table and report.csv
    Convergence(CommonArgs),
    /// Geometry accuracy diagnostics (no solve)
    Geomtest(CommonArgs),
    /// One solve on a single level with optional exports
    Single(CommonArgs),
    /// Exactness check for the piecewise linear interface solution
    Patchtest(CommonArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Plain key=value configuration file; command-line flags win
    #[arg(long)]
    config: Option<PathBuf>,
    /// Test case: disk | square-patch
    #[arg(long)]
    case: Option<String>,
    /// Polynomial degree (1..=5)
    #[arg(long)]
    k: Option<usize>,
    /// Number of refinement levels (>= 1)
    #[arg(long)]
    levels: Option<usize>,
    /// Search direction: grad | projected
    #[arg(long)]
    ghat: Option<String>,
    /// Penalty scale; lambda = scale * k^2
    #[arg(long)]
    lambda_scale: Option<f64>,
    /// Added to the default quadrature degree 2k+2
    #[arg(long)]
    quad_offset: Option<usize>,
    /// Output directory (created if missing)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    export_vtk: bool,
    #[arg(long)]
    export_matrix: bool,
    /// Use the published coefficient pair (pi, 2) instead of the
    /// flux-continuous (2, pi)
    #[arg(long)]
    alpha_paper: bool,
    /// Accepted for interface compatibility; execution is single-threaded
    #[arg(long)]
    threads: Option<usize>,
}

/// Effective configuration after merging file defaults and flag overrides.
#[derive(Clone)]
struct Effective {
    case: String,
    k: usize,
    levels: usize,
    ghat: String,
    lambda_scale: f64,
    quad_offset: usize,
    out: PathBuf,
    export_vtk: bool,
    export_matrix: bool,
    alpha_paper: bool,
    threads: usize,
}

fn parse_config_file(path: &Path) -> Result<Vec<(String, String)>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cli: cannot read {}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (lno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("cli: {}:{}: expected key=value", path.display(), lno + 1));
        };
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn merge(args: &CommonArgs) -> Result<Effective, String> {
    let mut eff = Effective {
        case: "disk".into(),
        k: 1,
        levels: 1,
        ghat: "grad".into(),
        lambda_scale: 20.0,
        quad_offset: 0,
        out: PathBuf::from("."),
        export_vtk: false,
        export_matrix: false,
        alpha_paper: false,
        threads: 1,
    };
    if let Some(path) = &args.config {
        for (key, value) in parse_config_file(path)? {
            let bad = |what: &str| format!("cli: config key {key}: invalid {what} '{value}'");
            match key.as_str() {
                "case" => eff.case = value,
                "k" => eff.k = value.parse().map_err(|_| bad("integer"))?,
                "levels" => eff.levels = value.parse().map_err(|_| bad("integer"))?,
                "ghat" => eff.ghat = value,
                "lambda-scale" => eff.lambda_scale = value.parse().map_err(|_| bad("number"))?,
                "quad-offset" => eff.quad_offset = value.parse().map_err(|_| bad("integer"))?,
                "out" => eff.out = PathBuf::from(value),
                "export-vtk" => eff.export_vtk = value.parse().map_err(|_| bad("bool"))?,
                "export-matrix" => eff.export_matrix = value.parse().map_err(|_| bad("bool"))?,
                "alpha-paper" => eff.alpha_paper = value.parse().map_err(|_| bad("bool"))?,
                "threads" => eff.threads = value.parse().map_err(|_| bad("integer"))?,
                _ => return Err(format!("cli: unknown config key '{key}'")),
            }
        }
    }
    if let Some(v) = &args.case {
        eff.case = v.clone();
    }
    if let Some(v) = args.k {
        eff.k = v;
    }
    if let Some(v) = args.levels {
        eff.levels = v;
    }
    if let Some(v) = &args.ghat {
        eff.ghat = v.clone();
    }
    if let Some(v) = args.lambda_scale {
        eff.lambda_scale = v;
    }
    if let Some(v) = args.quad_offset {
        eff.quad_offset = v;
    }
    if let Some(v) = &args.out {
        eff.out = v.clone();
    }
    eff.export_vtk |= args.export_vtk;
    eff.export_matrix |= args.export_matrix;
    eff.alpha_paper |= args.alpha_paper;
    if let Some(v) = args.threads {
        eff.threads = v;
    }
    if !(1..=5).contains(&eff.k) {
        return Err(format!("cli: k out of range: {} (expected 1..=5)", eff.k));
    }
    if eff.levels < 1 {
        return Err("cli: levels must be >= 1".into());
    }
    if !(eff.lambda_scale > 0.0) {
        return Err("cli: lambda-scale must be positive".into());
    }
    if eff.threads < 1 {
        return Err("cli: threads must be >= 1".into());
    }
    match eff.case.as_str() {
        "disk" | "square-patch" => {}
        other => return Err(format!("cli: unknown case '{other}' (expected disk or square-patch)")),
    }
    match eff.ghat.as_str() {
        "grad" | "projected" => {}
        other => return Err(format!("cli: unknown ghat '{other}' (expected grad or projected)")),
    }
    Ok(eff)
}

impl Effective {
    fn variant(&self) -> SearchVariant {
        match self.ghat.as_str() {
            "projected" => SearchVariant::Projected,
            _ => SearchVariant::Grad,
        }
    }

    fn case(&self) -> Result<ManufacturedCase, String> {
        let case = match self.case.as_str() {
            "square-patch" => square_patch_case(),
            _ => disk_case(self.alpha_paper),
        };
        case.map_err(|e| format!("analysis: {e}"))
    }

    fn run_config(&self) -> RunConfig {
        RunConfig {
            k: self.k,
            levels: self.levels,
            variant: self.variant(),
            lambda_scale: self.lambda_scale,
            quad_offset: self.quad_offset,
        }
    }

    /// Provenance lines echoed into every CSV output.
    fn header(&self) -> Vec<String> {
        vec![
            format!("cutiso {VERSION}"),
            format!(
                "case={} k={} levels={} ghat={} lambda-scale={} quad-offset={} alpha-paper={} threads={}",
                self.case,
                self.k,
                self.levels,
                self.ghat,
                self.lambda_scale,
                self.quad_offset,
                self.alpha_paper,
                self.threads
            ),
        ]
    }

    fn ensure_out(&self) -> Result<(), String> {
        std::fs::create_dir_all(&self.out).map_err(|e| format!("cli: cannot create {}: {e}", self.out.display()))
    }
}

fn fmt_eoc(v: Option<f64>) -> String {
    v.map_or_else(|| "     -".into(), |x| format!("{x:6.2}"))
}

fn cmd_convergence(eff: &Effective) -> Result<(), (u8, String)> {
    let case = eff.case().map_err(|e| (1, e))?;
    eff.ensure_out().map_err(|e| (1, e))?;
    let report = run_convergence(&case, &eff.run_config()).map_err(|e| (2, format!("analysis: {e}")))?;
    println!("case={} k={} ({} levels)", case.name, eff.k, eff.levels);
    println!(
        "{:>5} {:>12} {:>8} {:>14} {:>6} {:>14} {:>6} {:>12} {:>12} {:>12}",
        "level", "h", "ndof", "l2", "eoc", "h1", "eoc", "jump", "geom_if", "geom_bnd"
    );
    for r in &report.rows {
        println!(
            "{:>5} {:>12.4e} {:>8} {:>14.6e} {} {:>14.6e} {} {:>12.4e} {:>12.4e} {:>12.4e}",
            r.level,
            r.h,
            r.ndof,
            r.l2,
            fmt_eoc(r.l2_eoc),
            r.h1,
            fmt_eoc(r.h1_eoc),
            r.jump,
            r.geom_if,
            r.geom_bnd
        );
    }
    let path = eff.out.join("report.csv");
    write_report(&path, &report, &eff.header()).map_err(|e| (2, format!("io: {e}")))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_geomtest(eff: &Effective) -> Result<(), (u8, String)> {
    let case = eff.case().map_err(|e| (1, e))?;
    eff.ensure_out().map_err(|e| (1, e))?;
    let rows = run_geometry(&case, eff.k, eff.levels, eff.variant()).map_err(|e| (2, format!("analysis: {e}")))?;
    println!("case={} k={} geometry accuracy", case.name, eff.k);
    println!(
        "{:>5} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "level", "h", "dist_if", "dist_bnd", "min_det", "max_disp"
    );
    let mut csv = String::new();
    for l in eff.header() {
        csv.push_str(&format!("# {l}\n"));
    }
    csv.push_str("level,h,dist_if,dist_bnd,min_det,max_disp\n");
    for r in &rows {
        println!(
            "{:>5} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.6} {:>12.4e}",
            r.level, r.h, r.dist_if, r.dist_bnd, r.min_det, r.max_disp
        );
        csv.push_str(&format!(
            "{},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}\n",
            r.level, r.h, r.dist_if, r.dist_bnd, r.min_det, r.max_disp
        ));
    }
    if rows.len() >= 2 && rows.iter().all(|r| r.dist_if > 0.0) {
        let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let ds: Vec<f64> = rows.iter().map(|r| r.dist_if).collect();
        println!("fitted interface slope: {:.2}", log_slope(&hs, &ds));
    }
    let path = eff.out.join("geometry.csv");
    std::fs::write(&path, csv).map_err(|e| (2, format!("io: {e}")))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_single(eff: &Effective) -> Result<(), (u8, String)> {
    let case = eff.case().map_err(|e| (1, e))?;
    eff.ensure_out().map_err(|e| (1, e))?;
    let level = eff.levels - 1;
    let lv = solve_case_level(&case, eff.k, level, eff.variant(), eff.lambda_scale, eff.quad_offset)
        .map_err(|e| (2, format!("analysis: {e}")))?;
    let norms = error_norms(&case, &lv).map_err(|e| (2, format!("analysis: {e}")))?;
    println!(
        "case={} k={} level={} ndof={} l2={:.6e} h1={:.6e} jump={:.6e}",
        case.name, eff.k, level, lv.cs.n_unknowns, norms.l2, norms.h1, norms.jump
    );
    if eff.export_vtk {
        write_mesh_vtk(&eff.out.join("mesh.vtk"), &lv.mesh).map_err(|e| (2, format!("io: {e}")))?;
        write_interface_vtk(&eff.out.join("interface.vtk"), &lv, 8).map_err(|e| (2, format!("io: {e}")))?;
        write_vtk(&eff.out.join("solution.vtk"), &lv).map_err(|e| (2, format!("io: {e}")))?;
        write_interface_csv(&eff.out.join("interface.csv"), &lv, 8).map_err(|e| (2, format!("io: {e}")))?;
        println!("wrote mesh.vtk, interface.vtk, solution.vtk, interface.csv in {}", eff.out.display());
    }
    if eff.export_matrix {
        use cutiso::nitsche::{assemble_system, apply_dirichlet};
        let sys = assemble_system(
            &lv.mesh,
            &lv.space,
            &lv.cs,
            &lv.topo,
            &lv.bundle,
            &lv.params,
            [case.f[0].as_ref(), case.f[1].as_ref()],
        )
        .map_err(|e| (2, format!("nitsche: {e}")))?;
        let mut a = sys.matrix;
        let mut b = sys.rhs;
        apply_dirichlet(&mut a, &mut b, &lv.cs.dirichlet, &vec![0.0; lv.cs.n_unknowns]);
        write_matrix_market(&eff.out.join("system.mtx"), &a).map_err(|e| (2, format!("io: {e}")))?;
        println!("wrote system.mtx in {}", eff.out.display());
    }
    Ok(())
}

fn cmd_patchtest(eff: &Effective) -> Result<(), (u8, String)> {
    let case = square_patch_case().map_err(|e| (1, format!("analysis: {e}")))?;
    let mut ok = true;
    for level in 0..eff.levels {
        let lv = solve_case_level(&case, eff.k, level, eff.variant(), eff.lambda_scale, eff.quad_offset)
            .map_err(|e| (2, format!("analysis: {e}")))?;
        let norms = error_norms(&case, &lv).map_err(|e| (2, format!("analysis: {e}")))?;
        let pass = norms.l2 <= 1e-10;
        ok &= pass;
        println!(
            "patchtest k={} level={}: l2={:.3e} jump={:.3e} {}",
            eff.k,
            level,
            norms.l2,
            norms.jump,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if ok {
        Ok(())
    } else {
        Err((2, "cli: patch test failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = match &cli.command {
        Command::Convergence(a) | Command::Geomtest(a) | Command::Single(a) | Command::Patchtest(a) => a.clone(),
    };
    let eff = match merge(&args) {
        Ok(e) => e,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(1);
        }
    };
    let result = match &cli.command {
        Command::Convergence(_) => cmd_convergence(&eff),
        Command::Geomtest(_) => cmd_geomtest(&eff),
        Command::Single(_) => cmd_single(&eff),
        Command::Patchtest(_) => cmd_patchtest(&eff),
    };
    match result {
        Ok(()) => ExitCode::from(0),
        Err((code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}
