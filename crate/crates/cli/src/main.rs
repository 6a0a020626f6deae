mod config;
mod output;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ghostfd::analysis::{BoxStats, ErrorReport, Orders};
use ghostfd::benchmarks::{by_name, Peclet, CATALOG};
use ghostfd::pipeline::{run, sweep_with, RunOutcome, SweepLevel};
use ghostfd::stencils::StrategyKind;
use ghostfd::Error;
use serde::Serialize;
use serde_json::json;

use config::{parse_sweep, RunConfig};
use output::{
    convergence_csv, ghosts_csv, plot_files, stencils_csv, write_atomic, write_json, write_text,
};

#[derive(Parser)]
#[command(name = "ghostfd", version, about = "Fourth-order ghost-point solver for convection-diffusion on level-set domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one grid or a convergence sweep and write the results.
    Run(RunArgs),
    /// List the built-in benchmarks.
    Benchmarks,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; a previous run.json is accepted too.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    benchmark: Option<String>,
    #[arg(long)]
    strategy: Option<StrategyKind>,
    /// Cone aperture in degrees.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, conflicts_with = "sweep")]
    n: Option<usize>,
    /// `paper13` (13 grids, 160 to 502) or a comma-separated list of grid sizes.
    #[arg(long, value_parser = |s: &str| parse_sweep(s).map(GridList))]
    sweep: Option<GridList>,
    #[arg(long)]
    export_matrix: bool,
    #[arg(long)]
    export_diagnostics: bool,
    /// Skip the solve and sample the exact solution instead.
    #[arg(long)]
    inject_exact: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone)]
struct GridList(Vec<usize>);

enum Failure {
    Config(Error),
    Numerical(Error),
    /// Every sweep level failed; carries the first failure.
    Levels { kind: String, message: String },
    Io(io::Error),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e)
        } else {
            Failure::Numerical(e)
        }
    }
}

impl Failure {
    fn record(&self) -> serde_json::Value {
        match self {
            Failure::Config(e) | Failure::Numerical(e) => json!({ "error": e.kind(), "message": e.to_string() }),
            Failure::Levels { kind, message } => json!({ "error": kind, "message": message }),
            Failure::Io(e) => json!({ "error": "Io", "message": e.to_string() }),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) | Failure::Levels { .. } | Failure::Io(_) => 1,
        }
    }
}

fn resolve(args: RunArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(b) = args.benchmark {
        cfg.benchmark = b;
    }
    if let Some(kind) = args.strategy {
        cfg.strategy.kind = kind;
    }
    if let Some(theta) = args.theta {
        cfg.strategy.aperture_deg = theta;
    }
    if let Some(n) = args.n {
        cfg.n = Some(n);
        cfg.sweep = None;
    }
    if let Some(GridList(list)) = args.sweep {
        cfg.sweep = Some(list);
    }
    cfg.export_matrix |= args.export_matrix;
    cfg.export_diagnostics |= args.export_diagnostics;
    cfg.inject_exact |= args.inject_exact;
    if let Some(out) = args.out {
        cfg.out = out;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct StencilSummary<'a> {
    size_histogram: &'a std::collections::BTreeMap<usize, usize>,
    diameter: Option<BoxStats>,
    log10_chi: Option<BoxStats>,
    log10_ratio: Option<BoxStats>,
    zero_ratio_count: usize,
    axis_projected_count: usize,
}

#[derive(Serialize)]
struct SingleReport<'a> {
    config: serde_json::Value,
    n: usize,
    h: f64,
    interior: usize,
    ghosts: usize,
    unknowns: usize,
    nnz: usize,
    errors: ErrorReport,
    residual: f64,
    refinement_steps: Option<usize>,
    peclet: Option<Peclet>,
    ghost_coupling_nnz: usize,
    stencils: StencilSummary<'a>,
}

fn export_level(cfg: &RunConfig, out: &RunOutcome, suffix: &str) -> io::Result<()> {
    let dir = &cfg.out;
    if cfg.export_diagnostics {
        write_text(
            &dir.join(format!("stencils{suffix}.csv")),
            &stencils_csv(&out.assembly, &out.classification),
        )?;
    }
    if cfg.export_matrix {
        let system = &out.assembly.system;
        write_atomic(&dir.join(format!("matrix{suffix}.mtx")), |w| system.write_matrix_market(w))?;
        write_atomic(&dir.join(format!("rhs{suffix}.mtx")), |w| system.write_rhs_matrix_market(w))?;
    }
    Ok(())
}

fn run_single(cfg: &RunConfig, n: usize) -> Result<(), Failure> {
    let benchmark = by_name(&cfg.benchmark)?;
    let start = Instant::now();
    let out = run(&benchmark, n, &cfg.run_options())?;
    let total = start.elapsed();
    let diag = out.diagnostics();
    let c = &out.classification;
    let report = SingleReport {
        config: cfg.echo(),
        n,
        h: c.grid().spacing(),
        interior: c.interior_count(),
        ghosts: c.ghost_count(),
        unknowns: out.assembly.system.dim(),
        nnz: out.assembly.system.nnz(),
        errors: out.errors,
        residual: out.residual(),
        refinement_steps: out.solve.as_ref().map(|s| s.refinement_steps),
        peclet: out.peclet,
        ghost_coupling_nnz: out.assembly.system.ghost_coupling_nnz(),
        stencils: StencilSummary {
            size_histogram: &diag.size_histogram,
            diameter: diag.diameter,
            log10_chi: diag.log10_chi,
            log10_ratio: diag.log10_ratio,
            zero_ratio_count: diag.zero_ratio_count,
            axis_projected_count: diag.axis_projected_count,
        },
    };
    write_json(&cfg.out.join("run.json"), &report)?;
    write_json(
        &cfg.out.join("timings.json"),
        &json!({
            "total_s": total.as_secs_f64(),
            "factorization_s": out.solve.as_ref().map(|s| s.factorization_time.as_secs_f64()),
            "solve_s": out.solve.as_ref().map(|s| s.solve_time.as_secs_f64()),
        }),
    )?;
    write_text(&cfg.out.join("ghosts.csv"), &ghosts_csv(&diag))?;
    export_level(cfg, &out, "")?;

    let e = out.errors;
    println!(
        "{} N={n} {}: L1={:.3e} Linf={:.3e} gradL1={:.3e} gradLinf={:.3e} residual={:.2e}",
        cfg.benchmark, cfg.strategy.kind, e.l1, e.linf, e.grad_l1, e.grad_linf, report.residual
    );
    Ok(())
}

#[derive(Serialize)]
struct SweepReport<'a> {
    config: serde_json::Value,
    levels: &'a [SweepLevel],
}

#[derive(Serialize)]
struct OrdersReport<'a> {
    orders: Option<Orders>,
    pairwise: &'a [Vec<f64>; 4],
    fitted_levels: Vec<usize>,
    partial: bool,
    warnings: Vec<String>,
}

fn run_sweep(cfg: &RunConfig, grids: &[usize]) -> Result<(), Failure> {
    let benchmark = by_name(&cfg.benchmark)?;
    let start = Instant::now();
    let mut level_times = Vec::new();
    let mut export_error: Option<io::Error> = None;
    let outcome = sweep_with(&benchmark, grids, &cfg.run_options(), |out| {
        let n = out.classification.grid().cells_per_side();
        level_times.push(json!({
            "n": n,
            "factorization_s": out.solve.as_ref().map(|s| s.factorization_time.as_secs_f64()),
            "solve_s": out.solve.as_ref().map(|s| s.solve_time.as_secs_f64()),
        }));
        if export_error.is_some() {
            return;
        }
        let suffix = format!("_N{n}");
        let result = (|| {
            if cfg.export_diagnostics {
                write_text(&cfg.out.join(format!("ghosts{suffix}.csv")), &ghosts_csv(&out.diagnostics()))?;
            }
            export_level(cfg, out, &suffix)
        })();
        if let Err(e) = result {
            export_error = Some(e);
        }
    })?;
    if let Some(e) = export_error {
        return Err(e.into());
    }

    let reports = outcome.reports();
    let mut warnings = Vec::new();
    for level in &outcome.levels {
        if let Some((kind, msg)) = &level.failure {
            warnings.push(format!("N={} failed ({kind}): {msg}", level.n));
        }
    }
    match (&outcome.orders, &outcome.fit_failure) {
        (Some(_), _) => {}
        (None, Some(reason)) => warnings.push(format!("fit skipped: {reason}")),
        (None, None) => warnings.push(format!("fit skipped: {} successful levels, need 3", reports.len())),
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    write_json(
        &cfg.out.join("run.json"),
        &SweepReport {
            config: cfg.echo(),
            levels: &outcome.levels,
        },
    )?;
    write_text(&cfg.out.join("convergence.csv"), &convergence_csv(&outcome))?;
    write_json(
        &cfg.out.join("orders.json"),
        &OrdersReport {
            orders: outcome.orders,
            pairwise: &outcome.pairwise,
            fitted_levels: reports.iter().map(|r| r.n).collect(),
            partial: outcome.partial,
            warnings,
        },
    )?;
    for (name, text) in plot_files(&reports) {
        write_text(&cfg.out.join(name), &text)?;
    }
    write_json(
        &cfg.out.join("timings.json"),
        &json!({ "total_s": start.elapsed().as_secs_f64(), "levels": level_times }),
    )?;

    for r in &reports {
        println!(
            "N={:4} L1={:.3e} Linf={:.3e} gradL1={:.3e} gradLinf={:.3e}",
            r.n, r.l1, r.linf, r.grad_l1, r.grad_linf
        );
    }
    if let Some(o) = outcome.orders {
        println!(
            "orders: L1={:.2} Linf={:.2} gradL1={:.2} gradLinf={:.2}",
            o.l1, o.linf, o.grad_l1, o.grad_linf
        );
    }
    if let (true, Some((kind, message))) = (reports.is_empty(), outcome.levels.iter().find_map(|l| l.failure.clone())) {
        return Err(Failure::Levels { kind, message });
    }
    Ok(())
}

fn execute(args: RunArgs) -> Result<(), (Failure, Option<PathBuf>)> {
    let cfg = resolve(args).map_err(|f| (f, None))?;
    fs::create_dir_all(&cfg.out)
        .map_err(Failure::from)
        .and_then(|_| {
            if cfg.is_sweep() {
                run_sweep(&cfg, &cfg.grids())
            } else {
                run_single(&cfg, cfg.grids()[0])
            }
        })
        .map_err(|f| (f, Some(cfg.out.clone())))
}

fn report_failure(failure: &Failure, dir: Option<&Path>) {
    let record = failure.record();
    eprintln!("{record}");
    if let Some(dir) = dir.filter(|d| d.is_dir()) {
        let _ = write_json(&dir.join("error.json"), &record);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Benchmarks => {
            for name in CATALOG {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Run(args) => match execute(args) {
            Ok(()) => ExitCode::SUCCESS,
            Err((failure, dir)) => {
                report_failure(&failure, dir.as_deref());
                ExitCode::from(failure.exit_code())
            }
        },
    }
}
