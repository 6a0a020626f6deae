//! classify → stencils → assemble → solve → errors, for one grid or a sweep.

use serde::Serialize;

use crate::analysis::{compute_errors, fit_orders, pairwise_orders, stencil_diagnostics, ErrorReport, Orders, StencilDiagnostics};
use crate::assembly::{assemble, Assembly, AssemblyOptions};
use crate::benchmarks::{Benchmark, Peclet};
use crate::error::{Error, Result};
use crate::geometry::{classify_nodes_with, BoundaryNodePolicy, Classification, Grid};
use crate::solve::{solve, SolveReport};

/// The thirteen grids `N = 160 … 502`.
pub const REFERENCE_GRIDS: [usize; 13] = [160, 176, 194, 213, 234, 258, 283, 312, 343, 377, 415, 456, 502];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub assembly: AssemblyOptions,
    pub boundary_nodes: BoundaryNodePolicy,
    /// Skip the solve and use the exact solution sampled at the active nodes.
    pub inject_exact: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            assembly: AssemblyOptions::default(),
            boundary_nodes: BoundaryNodePolicy::Exterior,
            inject_exact: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub classification: Classification,
    pub assembly: Assembly,
    pub solution: Vec<f64>,
    /// `None` in exact-injection mode.
    pub solve: Option<SolveReport>,
    pub errors: ErrorReport,
    pub peclet: Option<Peclet>,
}

impl RunOutcome {
    pub fn diagnostics(&self) -> StencilDiagnostics {
        stencil_diagnostics(&self.assembly.stencils, &self.assembly.boundary_rows, &self.classification)
    }

    pub fn residual(&self) -> f64 {
        match &self.solve {
            Some(s) => s.relative_residual,
            None => self.assembly.system.relative_residual(&self.solution),
        }
    }
}

/// Classifies and assembles without solving.
pub fn prepare(benchmark: &Benchmark, n: usize, options: &RunOptions) -> Result<(Classification, Assembly)> {
    let grid = Grid::new(n)?;
    let classification = classify_nodes_with(&grid, benchmark.level_set.as_ref(), options.boundary_nodes)?;
    let assembly = assemble(
        &classification,
        benchmark.level_set.as_ref(),
        &benchmark.coefficients,
        &options.assembly,
    )?;
    Ok((classification, assembly))
}

pub fn run(benchmark: &Benchmark, n: usize, options: &RunOptions) -> Result<RunOutcome> {
    let (classification, assembly) = prepare(benchmark, n, options)?;
    let (solution, report) = if options.inject_exact {
        let grid = classification.grid();
        let exact = classification
            .active()
            .iter()
            .map(|&node| benchmark.exact.value(grid.point(node)))
            .collect();
        (exact, None)
    } else {
        let report = solve(&assembly.system)?;
        (report.solution.clone(), Some(report))
    };
    let errors = compute_errors(&solution, benchmark.exact.as_ref(), &classification)?;
    let peclet = benchmark.peclet_numbers(classification.grid());
    Ok(RunOutcome {
        classification,
        assembly,
        solution,
        solve: report,
        errors,
        peclet,
    })
}

/// One grid level of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepLevel {
    pub n: usize,
    pub errors: Option<ErrorReport>,
    pub residual: Option<f64>,
    pub ghosts: Option<usize>,
    pub peclet: Option<Peclet>,
    /// Error kind and message when the level failed.
    pub failure: Option<(String, String)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub levels: Vec<SweepLevel>,
    /// Slopes over the successful levels; `None` with fewer than three.
    pub orders: Option<Orders>,
    /// Consecutive-level orders per norm over the successful levels.
    pub pairwise: [Vec<f64>; 4],
    /// True when some level failed and the fit skipped it.
    pub partial: bool,
    /// Why the fit was not produced despite enough levels, e.g. a zero error.
    pub fit_failure: Option<String>,
}

impl SweepOutcome {
    pub fn reports(&self) -> Vec<ErrorReport> {
        self.levels.iter().filter_map(|l| l.errors).collect()
    }

    /// Whether every norm decreases strictly from each level to the next.
    pub fn strictly_decreasing(&self) -> [bool; 4] {
        let reports = self.reports();
        let mut out = [true; 4];
        for w in reports.windows(2) {
            for (k, flag) in out.iter_mut().enumerate() {
                *flag &= w[1].norms()[k] < w[0].norms()[k];
            }
        }
        out
    }
}

/// Runs every grid, recording failures instead of stopping; fits slopes over
/// the levels that succeeded.
pub fn sweep(benchmark: &Benchmark, grids: &[usize], options: &RunOptions) -> Result<SweepOutcome> {
    sweep_with(benchmark, grids, options, |_| {})
}

/// [`sweep`], handing each successful level to `visit` before it is dropped.
pub fn sweep_with(
    benchmark: &Benchmark,
    grids: &[usize],
    options: &RunOptions,
    mut visit: impl FnMut(&RunOutcome),
) -> Result<SweepOutcome> {
    if grids.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("grid list must be strictly increasing".into()));
    }
    let levels: Vec<SweepLevel> = grids
        .iter()
        .map(|&n| match run(benchmark, n, options) {
            Ok(out) => {
                visit(&out);
                SweepLevel {
                    n,
                    errors: Some(out.errors),
                    residual: Some(out.residual()),
                    ghosts: Some(out.classification.ghost_count()),
                    peclet: out.peclet,
                    failure: None,
                }
            }
            Err(e) => SweepLevel {
                n,
                errors: None,
                residual: None,
                ghosts: None,
                peclet: None,
                failure: Some((e.kind().to_string(), e.to_string())),
            },
        })
        .collect();
    let reports: Vec<ErrorReport> = levels.iter().filter_map(|l| l.errors).collect();
    let (orders, fit_failure) = if reports.len() >= 3 {
        match fit_orders(&reports) {
            Ok(o) => (Some(o), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    let h: Vec<f64> = reports.iter().map(|r| r.h).collect();
    let pairwise = std::array::from_fn(|k| {
        let e: Vec<f64> = reports.iter().map(|r| r.norms()[k]).collect();
        pairwise_orders(&h, &e)
    });
    Ok(SweepOutcome {
        partial: reports.len() < levels.len(),
        levels,
        orders,
        pairwise,
        fit_failure,
    })
}
