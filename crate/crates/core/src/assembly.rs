//! Global sparse system: fourth-order interior rows and ghost rows.

use std::io::{self, Write};
use std::sync::Arc;

use nalgebra::Vector2;

use crate::boundary_ops::{BoundaryOperatorRow, BoundaryRule, ConditionMeasure, LocalOperator};
use crate::error::{Error, Result};
use crate::geometry::{Classification, LevelSet, Node, Point};
use crate::stencils::{build_stencil, Stencil, StencilStrategy};

pub type ScalarField = dyn Fn(Point) -> f64 + Send + Sync;
pub type VectorField = dyn Fn(Point) -> Vector2<f64> + Send + Sync;

/// Second-derivative weights on offsets `-2..=2`, to be divided by `h²`.
pub const LAPLACE_WEIGHTS: [f64; 5] = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
/// First-derivative weights on offsets `-2..=2`, to be divided by `h`.
pub const CONVECTION_WEIGHTS: [f64; 5] = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];

/// Data of `-k Δφ + U·∇φ = f` in Ω with Robin conditions on ∂Ω.
#[derive(Clone)]
pub struct ProblemCoefficients {
    diffusion: f64,
    velocity: Arc<VectorField>,
    source: Arc<ScalarField>,
    boundary: Arc<BoundaryRule>,
}

impl std::fmt::Debug for ProblemCoefficients {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemCoefficients")
            .field("diffusion", &self.diffusion)
            .finish_non_exhaustive()
    }
}

impl ProblemCoefficients {
    pub fn new(
        diffusion: f64,
        velocity: Arc<VectorField>,
        source: Arc<ScalarField>,
        boundary: Arc<BoundaryRule>,
    ) -> Result<Self> {
        if !(diffusion > 0.0 && diffusion.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "diffusion coefficient must be positive, got {diffusion}"
            )));
        }
        Ok(ProblemCoefficients {
            diffusion,
            velocity,
            source,
            boundary,
        })
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    pub fn velocity(&self, p: Point) -> Vector2<f64> {
        (self.velocity)(p)
    }

    pub fn source(&self, p: Point) -> f64 {
        (self.source)(p)
    }

    pub fn boundary(&self) -> &BoundaryRule {
        self.boundary.as_ref()
    }
}

/// One matrix row with its right-hand side; entries sorted by column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub entries: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl SparseRow {
    fn normalized(mut entries: Vec<(usize, f64)>, rhs: f64) -> Self {
        entries.sort_by_key(|&(c, _)| c);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (c, v) in entries {
            match merged.last_mut() {
                Some((last, acc)) if *last == c => *acc += v,
                _ => merged.push((c, v)),
            }
        }
        SparseRow {
            entries: merged,
            rhs,
        }
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|&(c, v)| v * x[c]).sum()
    }
}

/// `-k (D⁴xx + D⁴yy) + u D⁴x + v D⁴y` at an interior node; rhs `f(x_k)`.
pub fn interior_row(
    node: Node,
    coeffs: &ProblemCoefficients,
    classification: &Classification,
) -> Result<SparseRow> {
    let grid = classification.grid();
    let h = grid.spacing();
    let x = grid.point(node);
    let u = coeffs.velocity(x);
    let k = coeffs.diffusion();
    let mut entries = Vec::with_capacity(9);
    for (axis, speed) in [(0usize, u.x), (1usize, u.y)] {
        for (w, offset) in (-2i64..=2).enumerate() {
            let weight = -k * LAPLACE_WEIGHTS[w] / (h * h) + speed * CONVECTION_WEIGHTS[w] / h;
            let (di, dj) = if axis == 0 { (offset, 0) } else { (0, offset) };
            let column = grid
                .offset(node, di, dj)
                .and_then(|n| classification.unknown(n))
                .ok_or(Error::MissingNeighbor {
                    i: node.i,
                    j: node.j,
                })?;
            entries.push((column, weight));
        }
    }
    Ok(SparseRow::normalized(entries, coeffs.source(x)))
}

/// `sum_l a_l φ_l = g(p_k)`.
pub fn ghost_row(row: &BoundaryOperatorRow) -> SparseRow {
    let entries = row.columns.iter().copied().zip(row.coefficients.iter().copied()).collect();
    SparseRow::normalized(entries, row.rhs)
}

/// Square sparse system in compressed row form, rows in unknown order.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    dim: usize,
    interior_count: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    rhs: Vec<f64>,
}

impl SparseSystem {
    /// Rows must be given in unknown order; the first `interior_count`
    /// belong to interior nodes.
    pub fn from_rows(rows: &[SparseRow], interior_count: usize) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut rhs = Vec::with_capacity(dim);
        row_ptr.push(0);
        for row in rows {
            for &(c, v) in &row.entries {
                assert!(c < dim, "column {c} out of range");
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
            rhs.push(row.rhs);
        }
        SparseSystem {
            dim,
            interior_count,
            row_ptr,
            col_idx,
            values,
            rhs,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn interior_count(&self) -> usize {
        self.interior_count
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect()
    }

    /// `F - A x`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.mul_vec(x)
            .into_iter()
            .zip(&self.rhs)
            .map(|(ax, b)| b - ax)
            .collect()
    }

    /// `|A x - F|₂ / |F|₂`, or the absolute residual when `F = 0`.
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let r = norm2(&self.residual(x));
        let f = norm2(&self.rhs);
        if f > 0.0 {
            r / f
        } else {
            r
        }
    }

    /// `(row, column, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// Nonzeros of the ghost-ghost block off its diagonal.
    pub fn ghost_coupling_nnz(&self) -> usize {
        self.triplets()
            .filter(|&(r, c, _)| r >= self.interior_count && c >= self.interior_count && r != c)
            .count()
    }

    /// Matrix Market coordinate format, 1-based indices.
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.dim, self.dim, self.nnz())?;
        for (r, c, v) in self.triplets() {
            writeln!(out, "{} {} {:.17e}", r + 1, c + 1, v)?;
        }
        Ok(())
    }

    /// Right-hand side as a one-column Matrix Market array.
    pub fn write_rhs_matrix_market<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix array real general")?;
        writeln!(out, "{} 1", self.dim)?;
        for v in &self.rhs {
            writeln!(out, "{v:.17e}")?;
        }
        Ok(())
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Everything produced while assembling one problem.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub system: SparseSystem,
    /// Stencils and boundary rows, one per ghost in unknown order.
    pub stencils: Vec<Stencil>,
    pub boundary_rows: Vec<BoundaryOperatorRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyOptions {
    pub strategy: StencilStrategy,
    pub order: usize,
    /// Use unscaled monomials in the boundary reconstruction.
    pub raw_basis: bool,
    pub condition_measure: ConditionMeasure,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions {
            strategy: StencilStrategy::default(),
            order: crate::basis::DEFAULT_ORDER,
            raw_basis: false,
            condition_measure: ConditionMeasure::default(),
        }
    }
}

/// Interior rows first, then one boundary row per ghost.
pub fn assemble(
    classification: &Classification,
    level_set: &dyn LevelSet,
    coeffs: &ProblemCoefficients,
    options: &AssemblyOptions,
) -> Result<Assembly> {
    options.strategy.validate(options.order)?;
    let mut operator = LocalOperator::new(classification, coeffs.boundary(), options.order)
        .with_measure(options.condition_measure);
    if options.raw_basis {
        operator = operator.with_raw_basis();
    }

    let mut rows = Vec::with_capacity(classification.active_count());
    for &node in classification.interior() {
        rows.push(interior_row(node, coeffs, classification)?);
    }

    let mut stencils = Vec::with_capacity(classification.ghost_count());
    let mut boundary_rows = Vec::with_capacity(classification.ghost_count());
    for &ghost in classification.ghosts() {
        let stencil = build_stencil(ghost, &options.strategy, classification, level_set, &operator)?;
        let row = operator.row(&stencil)?;
        rows.push(ghost_row(&row));
        stencils.push(stencil);
        boundary_rows.push(row);
    }

    Ok(Assembly {
        system: SparseSystem::from_rows(&rows, classification.interior_count()),
        stencils,
        boundary_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::RobinData;
    use crate::benchmarks::annulus_homogeneous;
    use crate::geometry::{classify_nodes, classify_nodes_with, BoundaryNodePolicy, Circle, Grid, Square};
    use crate::stencils::StrategyKind;

    fn coefficients(k: f64, u: Vector2<f64>, dirichlet: f64) -> Result<ProblemCoefficients> {
        ProblemCoefficients::new(
            k,
            Arc::new(move |_| u),
            Arc::new(|_| 0.0),
            Arc::new(move |_: &crate::geometry::CollarPoint| RobinData::dirichlet(dirichlet)),
        )
    }

    fn square(n: usize) -> Classification {
        classify_nodes(&Grid::new(n).unwrap(), &Square { half_width: 0.81 }).unwrap()
    }

    fn sampled(c: &Classification, f: impl Fn(Point) -> f64) -> Vec<f64> {
        c.active().iter().map(|&n| f(c.grid().point(n))).collect()
    }

    #[test]
    fn rejects_non_positive_diffusion() {
        for k in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                coefficients(k, Vector2::zeros(), 0.0),
                Err(Error::InvalidParameter(_))
            ));
        }
    }

    #[test]
    fn laplacian_row_on_quadratic() {
        let c = square(40);
        let coeffs = coefficients(1.0, Vector2::zeros(), 0.0).unwrap();
        let phi = sampled(&c, |p| p.x * p.x);
        for &node in c.interior().iter().step_by(37) {
            let row = interior_row(node, &coeffs, &c).unwrap();
            assert!(row.entries.len() <= 9);
            assert!((row.dot(&phi) + 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn convection_diffusion_row_on_quartic() {
        let c = square(40);
        let coeffs = coefficients(1.0, Vector2::new(1.0, 0.0), 0.0).unwrap();
        let phi = sampled(&c, |p| p.x.powi(4));
        let node = c.grid().nearest(Point::new(0.5, 0.0));
        assert!((c.grid().point(node).x - 0.5).abs() < 1e-15);
        let row = interior_row(node, &coeffs, &c).unwrap();
        assert!((row.dot(&phi) + 2.5).abs() < 1e-9);
    }

    #[test]
    fn ghost_row_copies_coefficients() {
        let row = BoundaryOperatorRow {
            ghost: Node::new(0, 0),
            row: 3,
            columns: vec![3, 1, 2],
            coefficients: vec![0.5, 0.5, 0.0],
            rhs: 0.0,
            chi: 1.0,
            ratio: 0.0,
        };
        let sparse = ghost_row(&row);
        assert_eq!(sparse.entries, vec![(1, 0.5), (2, 0.0), (3, 0.5)]);
        assert_eq!(sparse.rhs, 0.0);
    }

    #[test]
    fn rows_merge_duplicate_columns() {
        let row = SparseRow::normalized(vec![(2, 1.0), (0, 3.0), (2, -0.5)], 1.0);
        assert_eq!(row.entries, vec![(0, 3.0), (2, 0.5)]);
    }

    #[test]
    fn square_system_dimensions() {
        let c = square(40);
        let sq = Square { half_width: 0.81 };
        let coeffs = coefficients(1.0, Vector2::zeros(), 0.0).unwrap();
        let a = assemble(&c, &sq, &coeffs, &AssemblyOptions::default()).unwrap();
        // brute force: interior nodes with both |x|,|y| < 0.81 lie in -16..=16
        // around the centre; ghosts extend the cross by two in each direction.
        let interior = 33 * 33;
        let ghosts = 4 * 2 * 33;
        assert_eq!(c.interior_count(), interior);
        assert_eq!(c.ghost_count(), ghosts);
        assert_eq!(a.system.dim(), interior + ghosts);
        let interior_nnz: usize = (0..interior).map(|r| a.system.row(r).0.len()).sum();
        assert!(interior_nnz <= 9 * interior);
    }

    #[test]
    fn constants_satisfy_dirichlet_system() {
        let c = classify_nodes(&Grid::new(48).unwrap(), &Circle::new(Point::new(0.03, -0.02), 0.71)).unwrap();
        let circle = Circle::new(Point::new(0.03, -0.02), 0.71);
        let coeffs = coefficients(1.3, Vector2::new(0.7, -0.4), 2.5).unwrap();
        for kind in [StrategyKind::S1, StrategyKind::S3, StrategyKind::S4_3] {
            let options = AssemblyOptions {
                strategy: StencilStrategy::new(kind),
                ..AssemblyOptions::default()
            };
            let a = match assemble(&c, &circle, &coeffs, &options) {
                Ok(a) => a,
                Err(Error::InactiveMember { .. }) if kind == StrategyKind::S1 => continue,
                Err(e) => panic!("{kind}: {e}"),
            };
            let ones = vec![2.5; a.system.dim()];
            let r = a.system.residual(&ones);
            assert!(r.iter().all(|v| v.abs() < 1e-9), "{kind}");
        }
    }

    #[test]
    fn cone_stencils_couple_ghosts() {
        let b = annulus_homogeneous();
        let c = classify_nodes_with(&Grid::new(160).unwrap(), b.level_set.as_ref(), BoundaryNodePolicy::Exterior).unwrap();
        let a = assemble(&c, b.level_set.as_ref(), &b.coefficients, &AssemblyOptions::default()).unwrap();
        assert!(a.system.ghost_coupling_nnz() > 0);
        for (k, row) in a.boundary_rows.iter().enumerate() {
            let r = a.stencils[k].collar.point.norm();
            let expected = if r < 0.5 * (crate::benchmarks::inner_radius() + crate::benchmarks::outer_radius()) {
                0.0
            } else {
                1.0
            };
            assert_eq!(row.rhs, expected);
        }
    }

    #[test]
    fn s3_rows_are_explicit() {
        let b = annulus_homogeneous();
        let c = classify_nodes_with(&Grid::new(160).unwrap(), b.level_set.as_ref(), BoundaryNodePolicy::Exterior).unwrap();
        let options = AssemblyOptions {
            strategy: StencilStrategy::new(StrategyKind::S3),
            ..AssemblyOptions::default()
        };
        let a = assemble(&c, b.level_set.as_ref(), &b.coefficients, &options).unwrap();
        assert_eq!(a.system.ghost_coupling_nnz(), 0);
    }

    #[test]
    fn matrix_market_output() {
        let rows = vec![
            SparseRow::normalized(vec![(0, 2.0)], 1.0),
            SparseRow::normalized(vec![(0, -1.0), (1, 0.5)], 0.0),
        ];
        let sys = SparseSystem::from_rows(&rows, 1);
        let mut out = Vec::new();
        sys.write_matrix_market(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("%%MatrixMarket matrix coordinate real general"));
        assert_eq!(lines.next(), Some("2 2 3"));
        assert_eq!(lines.next(), Some("1 1 2.00000000000000000e0"));
        assert_eq!(sys.mul_vec(&[1.0, 2.0]), vec![2.0, 0.0]);
        assert_eq!(sys.relative_residual(&[0.5, 1.0]), 0.0);
    }
}
