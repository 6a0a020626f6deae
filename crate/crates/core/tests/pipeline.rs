use std::sync::Arc;

use ghostfd::analysis::fit_order;
use ghostfd::assembly::{assemble, AssemblyOptions, ProblemCoefficients};
use ghostfd::basis::RobinData;
use ghostfd::benchmarks::{by_name, polynomial_manufactured};
use ghostfd::geometry::{classify_nodes, Circle, CollarPoint, Grid, Point};
use ghostfd::pipeline::{run, sweep, RunOptions};
use ghostfd::stencils::{StencilStrategy, StrategyKind};
use ghostfd::Error;
use nalgebra::Vector2;
use proptest::prelude::*;

fn options(kind: StrategyKind) -> RunOptions {
    RunOptions {
        assembly: AssemblyOptions {
            strategy: StencilStrategy::new(kind),
            ..AssemblyOptions::default()
        },
        ..RunOptions::default()
    }
}

#[test]
fn quartic_is_reproduced_by_every_cone_and_explicit_strategy() {
    let b = polynomial_manufactured();
    for kind in [StrategyKind::S3, StrategyKind::S4_1, StrategyKind::S4_2, StrategyKind::S4_3] {
        let out = run(&b, 96, &options(kind)).unwrap();
        assert!(out.errors.linf < 1e-9, "{kind}: {:e}", out.errors.linf);
        assert!(out.errors.grad_linf < 1e-8, "{kind}: {:e}", out.errors.grad_linf);
        let ghost_errors = out.classification.ghosts().iter().enumerate().map(|(k, &g)| {
            let p = out.classification.grid().point(g);
            (out.solution[out.classification.interior_count() + k] - b.exact.value(p)).abs()
        });
        assert!(ghost_errors.fold(0.0f64, f64::max) < 1e-8, "{kind}");
    }
}

#[test]
fn exact_injection_short_circuits_the_solve() {
    let b = by_name("annulus").unwrap();
    let opts = RunOptions {
        inject_exact: true,
        ..RunOptions::default()
    };
    let out = run(&b, 160, &opts).unwrap();
    assert!(out.solve.is_none());
    assert_eq!(out.errors.l1, 0.0);
    assert_eq!(out.errors.linf, 0.0);
    // only the finite-difference gradient truncation remains
    assert!(out.errors.grad_linf < 1e-6);
    assert!(out.residual() < 1e-4);
}

#[test]
fn annulus_solution_is_close_to_the_logarithm() {
    let b = by_name("annulus").unwrap();
    let out = run(&b, 160, &RunOptions::default()).unwrap();
    assert!(out.residual() <= 1e-10);
    assert!(out.errors.linf < 1e-5, "{:e}", out.errors.linf);
    assert!(out.errors.l1 < 1e-5);
}

#[test]
fn runs_are_deterministic() {
    let b = by_name("case3").unwrap();
    let a = run(&b, 120, &RunOptions::default()).unwrap();
    let c = run(&b, 120, &RunOptions::default()).unwrap();
    assert_eq!(a.solution, c.solution);
    assert_eq!(a.errors, c.errors);
    let members = |o: &ghostfd::pipeline::RunOutcome| o.assembly.stencils.iter().map(|s| s.members.clone()).collect::<Vec<_>>();
    assert_eq!(members(&a), members(&c));
}

#[test]
fn sweep_records_failed_levels_and_skips_the_fit() {
    let b = by_name("annulus").unwrap();
    let out = sweep(&b, &[160, 194, 234], &options(StrategyKind::S1)).unwrap();
    let failed: Vec<usize> = out.levels.iter().filter(|l| l.failure.is_some()).map(|l| l.n).collect();
    assert_eq!(failed, vec![194]);
    assert!(out.partial);
    assert!(out.orders.is_none());
    assert_eq!(out.pairwise[0].len(), 1);
    let (kind, _) = out.levels[1].failure.clone().unwrap();
    assert_eq!(kind, "InactiveMember");
}

#[test]
fn zero_errors_skip_the_fit_without_failing() {
    let b = by_name("annulus").unwrap();
    let opts = RunOptions {
        inject_exact: true,
        ..RunOptions::default()
    };
    let out = sweep(&b, &[48, 56, 64], &opts).unwrap();
    assert!(out.orders.is_none());
    assert!(out.fit_failure.as_deref().unwrap().contains("DegenerateFit"));
    assert_eq!(out.reports().len(), 3);
}

#[test]
fn sweep_rejects_unordered_grids() {
    let b = by_name("annulus").unwrap();
    assert!(matches!(
        sweep(&b, &[194, 160, 234], &RunOptions::default()),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn sweep_orders_match_a_direct_fit() {
    let b = by_name("case2").unwrap();
    let out = sweep(&b, &[64, 80, 96], &RunOptions::default()).unwrap();
    let reports = out.reports();
    let h: Vec<f64> = reports.iter().map(|r| r.h).collect();
    let l1: Vec<f64> = reports.iter().map(|r| r.l1).collect();
    assert_eq!(out.orders.unwrap().l1, fit_order(&h, &l1).unwrap());
    assert!(!out.partial);
}

#[test]
fn peclet_numbers_follow_the_grid() {
    let b = by_name("boundary-layer-25").unwrap();
    let out = run(&b, 160, &RunOptions::default()).unwrap();
    let pe = out.peclet.unwrap();
    assert!((pe.local - 25.0 * 2.0 / 160.0).abs() < 1e-14);
    assert!(run(&by_name("annulus").unwrap(), 64, &RunOptions::default()).unwrap().peclet.is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    // Interior rows annihilate constants and Dirichlet ghost rows reproduce
    // them, so a constant field satisfies the assembled system exactly.
    #[test]
    fn constants_solve_dirichlet_systems(
        cx in -0.1f64..0.1,
        cy in -0.1f64..0.1,
        radius in 0.45f64..0.75,
        value in -3.0f64..3.0,
        u in -2.0f64..2.0,
        n in 40usize..72,
    ) {
        let circle = Circle::new(Point::new(cx, cy), radius);
        let classification = classify_nodes(&Grid::new(n).unwrap(), &circle).unwrap();
        let coeffs = ProblemCoefficients::new(
            1.0,
            Arc::new(move |_| Vector2::new(u, -0.5 * u)),
            Arc::new(|_| 0.0),
            Arc::new(move |_: &CollarPoint| RobinData::dirichlet(value)),
        ).unwrap();
        let a = assemble(&classification, &circle, &coeffs, &AssemblyOptions::default()).unwrap();
        let constant = vec![value; a.system.dim()];
        let worst = a.system.residual(&constant).iter().fold(0.0f64, |m, r| m.max(r.abs()));
        prop_assert!(worst < 1e-9 * value.abs().max(1.0), "residual {}", worst);
        prop_assert_eq!(a.system.dim(), classification.interior_count() + classification.ghost_count());
    }
}
