//! Discrete boundary operator: the minimum-norm coefficient vector that makes
//! a stencil reproduce the Robin operator exactly on the local polynomial basis,
//! together with the local (χ) and global (R_k) conditioning measures.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{boundary_action, enumerate_basis, eval_monomial, BasisConfig, RobinData};
use crate::error::{Error, Result};
use crate::geometry::{Classification, CollarPoint, Node, Point};
use crate::stencils::Stencil;

/// `sigma_min / sigma_max` below this counts as rank deficient.
pub const RANK_TOL: f64 = 1e-13;
/// `|a_kk|` below this makes `R_k` infinite.
pub const PIVOT_TOL: f64 = 1e-14;

/// Robin data as a function of the collar point (position and normal).
pub type BoundaryRule = dyn Fn(&CollarPoint) -> RobinData + Send + Sync;

/// `C a = g`: one row per basis monomial, one column per stencil member.
#[derive(Debug, Clone)]
pub struct ConstraintMatrix {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

pub fn assemble_constraints(
    members: &[Point],
    collar: &CollarPoint,
    robin: &RobinData,
    cfg: &BasisConfig,
) -> ConstraintMatrix {
    let basis = enumerate_basis(cfg.order);
    let matrix = DMatrix::from_fn(basis.len(), members.len(), |m, l| {
        eval_monomial(basis[m], members[l], cfg)
    });
    let rhs = DVector::from_iterator(
        basis.len(),
        basis.iter().map(|&alpha| boundary_action(alpha, collar, robin, cfg)),
    );
    ConstraintMatrix { matrix, rhs }
}

fn singular_ratio(cm: &ConstraintMatrix) -> f64 {
    let (rows, cols) = cm.matrix.shape();
    if cols < rows {
        return 0.0;
    }
    let sv = cm.matrix.singular_values();
    let max = sv.max();
    let min = sv.min();
    if max == 0.0 || !max.is_finite() {
        0.0
    } else {
        min / max
    }
}

/// Which matrix the local condition number `chi` is taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionMeasure {
    /// `sigma_max / sigma_min` of the constraint matrix `C`.
    #[default]
    Constraint,
    /// Condition number of the Gram matrix `C Cᵀ`, `(sigma_max / sigma_min)²`.
    Gram,
}

/// Local condition number of a constraint matrix; `+inf` when rank deficient.
pub fn condition_number(cm: &ConstraintMatrix, measure: ConditionMeasure) -> f64 {
    let ratio = singular_ratio(cm);
    if ratio < RANK_TOL {
        return f64::INFINITY;
    }
    match measure {
        ConditionMeasure::Constraint => 1.0 / ratio,
        ConditionMeasure::Gram => (1.0 / ratio).powi(2),
    }
}

/// [`condition_number`] with the default measure.
pub fn local_condition(cm: &ConstraintMatrix) -> f64 {
    condition_number(cm, ConditionMeasure::default())
}

/// Minimum-norm solution without the rank check. Uses the thin QR of `Cᵀ`:
/// with `Cᵀ = Q R`, `a = Q R⁻ᵀ g`.
fn min_norm_unchecked(cm: &ConstraintMatrix) -> Option<DVector<f64>> {
    let qr = cm.matrix.transpose().qr();
    let y = qr.r().transpose().solve_lower_triangular(&cm.rhs)?;
    Some(qr.q() * y)
}

/// Unique minimum-norm `a` with `C a = g`.
pub fn solve_min_norm(cm: &ConstraintMatrix) -> Result<DVector<f64>> {
    let ratio = singular_ratio(cm);
    if ratio < RANK_TOL {
        return Err(Error::NotAdmissible(format!(
            "{}x{} constraint matrix has singular-value ratio {ratio:e}",
            cm.matrix.nrows(),
            cm.matrix.ncols()
        )));
    }
    min_norm_unchecked(cm)
        .ok_or_else(|| Error::NotAdmissible("triangular factor is singular".into()))
}

/// `max |a_l| / |a_k|` over ghost members other than the centre; `0` when the
/// centre is the only ghost, `+inf` when `|a_k|` vanishes.
pub fn global_ratio(
    coefficients: &[f64],
    members: &[Node],
    ghost: Node,
    classification: &Classification,
) -> f64 {
    let Some(center) = members.iter().position(|&m| m == ghost) else {
        return f64::INFINITY;
    };
    let mut largest: f64 = 0.0;
    for (l, &m) in members.iter().enumerate() {
        if l != center && classification.is_ghost(m) {
            largest = largest.max(coefficients[l].abs());
        }
    }
    if largest == 0.0 {
        return 0.0;
    }
    let pivot = coefficients[center].abs();
    if pivot <= PIVOT_TOL {
        f64::INFINITY
    } else {
        largest / pivot
    }
}

/// Outcome of trying one candidate stencil.
#[derive(Debug, Clone)]
pub struct StencilQuality {
    /// `None` when the stencil is not admissible.
    pub coefficients: Option<Vec<f64>>,
    pub chi: f64,
    pub ratio: f64,
}

impl StencilQuality {
    pub fn is_admissible(&self) -> bool {
        self.coefficients.is_some()
    }
}

/// Anything able to score a trial stencil; the cone builders only need this.
pub trait ConditioningOracle {
    /// Number of basis functions a stencil must at least match.
    fn basis_size(&self) -> usize;
    fn evaluate(&self, ghost: Node, members: &[Node], collar: &CollarPoint) -> StencilQuality;
}

/// One ghost equation `sum_l a_l phi_l = g(p_k)`.
#[derive(Debug, Clone)]
pub struct BoundaryOperatorRow {
    pub ghost: Node,
    /// Unknown index of the ghost.
    pub row: usize,
    /// Unknown indices of the stencil members, in stencil order.
    pub columns: Vec<usize>,
    pub coefficients: Vec<f64>,
    pub rhs: f64,
    pub chi: f64,
    pub ratio: f64,
}

/// Builds boundary operator rows for one problem on one grid.
pub struct LocalOperator<'a> {
    classification: &'a Classification,
    boundary: &'a BoundaryRule,
    order: usize,
    raw_basis: bool,
    measure: ConditionMeasure,
}

impl<'a> LocalOperator<'a> {
    pub fn new(classification: &'a Classification, boundary: &'a BoundaryRule, order: usize) -> Self {
        LocalOperator {
            classification,
            boundary,
            order,
            raw_basis: false,
            measure: ConditionMeasure::default(),
        }
    }

    /// Switches to unscaled monomials `(x - x_k)^alpha`.
    pub fn with_raw_basis(mut self) -> Self {
        self.raw_basis = true;
        self
    }

    pub fn with_measure(mut self, measure: ConditionMeasure) -> Self {
        self.measure = measure;
        self
    }

    pub fn classification(&self) -> &Classification {
        self.classification
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn constraints(&self, ghost: Node, members: &[Node], collar: &CollarPoint) -> ConstraintMatrix {
        let grid = self.classification.grid();
        let scale = if self.raw_basis { 1.0 } else { grid.spacing() };
        let cfg = BasisConfig::new(self.order, scale, grid.point(ghost));
        let points: Vec<Point> = members.iter().map(|&m| grid.point(m)).collect();
        let robin = (self.boundary)(collar);
        assemble_constraints(&points, collar, &robin, &cfg)
    }

    /// Finalizes a stencil into a ghost equation.
    pub fn row(&self, stencil: &Stencil) -> Result<BoundaryOperatorRow> {
        let cm = self.constraints(stencil.ghost, &stencil.members, &stencil.collar);
        let chi = condition_number(&cm, self.measure);
        let coefficients = solve_min_norm(&cm)
            .map_err(|e| match e {
                Error::NotAdmissible(msg) => Error::NotAdmissible(format!(
                    "ghost ({}, {}): {msg}",
                    stencil.ghost.i, stencil.ghost.j
                )),
                other => other,
            })?
            .as_slice()
            .to_vec();
        let ratio = global_ratio(&coefficients, &stencil.members, stencil.ghost, self.classification);
        let unknown = |n: Node| {
            self.classification
                .unknown(n)
                .ok_or(Error::InactiveMember { i: n.i as i64, j: n.j as i64 })
        };
        Ok(BoundaryOperatorRow {
            ghost: stencil.ghost,
            row: unknown(stencil.ghost)?,
            columns: stencil.members.iter().map(|&m| unknown(m)).collect::<Result<_>>()?,
            coefficients,
            rhs: (self.boundary)(&stencil.collar).value,
            chi,
            ratio,
        })
    }
}

impl ConditioningOracle for LocalOperator<'_> {
    fn basis_size(&self) -> usize {
        crate::basis::basis_size(self.order)
    }

    fn evaluate(&self, ghost: Node, members: &[Node], collar: &CollarPoint) -> StencilQuality {
        let cm = self.constraints(ghost, members, collar);
        let chi = condition_number(&cm, self.measure);
        let coefficients = if chi.is_finite() {
            min_norm_unchecked(&cm).map(|a| a.as_slice().to_vec())
        } else {
            None
        };
        let ratio = coefficients
            .as_deref()
            .map_or(f64::INFINITY, |a| global_ratio(a, members, ghost, self.classification));
        StencilQuality {
            coefficients,
            chi,
            ratio,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{classify_nodes, Annulus, CollarMode, Grid};
    use nalgebra::Vector2;
    use proptest::prelude::*;

    fn collar(ghost: Point, point: Point) -> CollarPoint {
        CollarPoint {
            ghost,
            point,
            normal: Vector2::new(1.0, 0.0),
            mode: CollarMode::ClosestPoint,
        }
    }

    #[test]
    fn single_point_stencil_matrix() {
        let xk = Point::new(0.3, 0.4);
        let cfg = BasisConfig::new(2, 0.1, xk);
        let cm = assemble_constraints(&[xk], &collar(xk, xk), &RobinData::dirichlet(0.0), &cfg);
        assert_eq!(cm.matrix.shape(), (3, 1));
        assert_eq!(cm.matrix.column(0).as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(cm.rhs.as_slice(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn interpolation_at_the_centre() {
        let h = 0.1;
        let xk = Point::new(0.0, 0.0);
        let pts = [xk, xk + Vector2::new(h, 0.0), xk + Vector2::new(0.0, h)];
        let cfg = BasisConfig::new(2, h, xk);
        let cm = assemble_constraints(&pts, &collar(xk, xk), &RobinData::dirichlet(0.0), &cfg);
        let a = solve_min_norm(&cm).unwrap();
        assert!((a - DVector::from_vec(vec![1.0, 0.0, 0.0])).norm() < 1e-14);

        // Collar halfway to the right neighbour: linear interpolation.
        let p = xk + Vector2::new(h / 2.0, 0.0);
        let cm = assemble_constraints(&pts, &collar(xk, p), &RobinData::dirichlet(0.0), &cfg);
        let a = solve_min_norm(&cm).unwrap();
        assert!((a - DVector::from_vec(vec![0.5, 0.5, 0.0])).norm() < 1e-14);
    }

    #[test]
    fn orthonormal_rows_have_unit_condition() {
        let cm = ConstraintMatrix {
            matrix: DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
            rhs: DVector::zeros(2),
        };
        assert!((local_condition(&cm) - 1.0).abs() < 1e-14);
        let scaled = ConstraintMatrix {
            matrix: DMatrix::from_row_slice(2, 3, &[4.0, 0.0, 0.0, 0.0, 0.0, 0.5]),
            rhs: DVector::zeros(2),
        };
        assert!((condition_number(&scaled, ConditionMeasure::Constraint) - 8.0).abs() < 1e-13);
        assert!((condition_number(&scaled, ConditionMeasure::Gram) - 64.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_point_is_rank_deficient() {
        let h = 0.1;
        let xk = Point::zeros();
        let pts = [xk, xk + Vector2::new(h, 0.0), xk + Vector2::new(h, 0.0)];
        let cfg = BasisConfig::new(2, h, xk);
        let cm = assemble_constraints(&pts, &collar(xk, xk), &RobinData::dirichlet(0.0), &cfg);
        assert_eq!(local_condition(&cm), f64::INFINITY);
        assert!(matches!(solve_min_norm(&cm), Err(Error::NotAdmissible(_))));
    }

    #[test]
    fn global_ratio_cases() {
        let grid = Grid::new(32).unwrap();
        let c = classify_nodes(&grid, &Annulus::new(0.3, 0.8)).unwrap();
        let g = c.ghosts()[0];
        let other_ghost = c.ghosts()[1];
        let inner = c.interior()[0];
        assert_eq!(global_ratio(&[1.0, 7.0], &[g, inner], g, &c), 0.0);
        assert_eq!(global_ratio(&[1.0, -2.5, 9.0], &[g, other_ghost, inner], g, &c), 2.5);
        assert_eq!(global_ratio(&[0.0, 1.0], &[g, other_ghost], g, &c), f64::INFINITY);
    }

    /// Fifteen-point square stencil plus `extra` lattice points.
    fn lattice_points(h: f64, xk: Point, extra: usize) -> Vec<Point> {
        let mut offs: Vec<(i32, i32)> = Vec::new();
        for a in 0..=4 {
            for b in 0..=(4 - a) {
                offs.push((a, b));
            }
        }
        let more = [(3, 2), (2, 3), (5, 0), (0, 5), (4, 1), (1, 4)];
        offs.extend(more.iter().take(extra));
        offs.iter()
            .map(|&(a, b)| xk + Vector2::new(a as f64 * h, b as f64 * h))
            .collect()
    }

    #[test]
    fn square_case_matches_direct_solve() {
        let h = 0.02;
        let xk = Point::new(0.1, 0.1);
        let pts = lattice_points(h, xk, 0);
        let c = CollarPoint {
            ghost: xk,
            point: xk + Vector2::new(0.3 * h, 0.45 * h),
            normal: Vector2::new(0.6, 0.8),
            mode: CollarMode::ClosestPoint,
        };
        let cfg = BasisConfig::new(5, h, xk);
        for robin in [RobinData::dirichlet(0.0), RobinData::neumann(0.0)] {
            let cm = assemble_constraints(&pts, &c, &robin, &cfg);
            let a = solve_min_norm(&cm).unwrap();
            let direct = cm.matrix.clone().lu().solve(&cm.rhs).unwrap();
            assert!((&a - &direct).norm() <= 1e-11 * direct.norm());
        }
    }

    #[test]
    fn raw_and_scaled_bases_agree() {
        let h = 1.0 / 80.0;
        let xk = Point::new(-0.2, 0.35);
        let pts = lattice_points(h, xk, 4);
        let c = CollarPoint {
            ghost: xk,
            point: xk + Vector2::new(0.7 * h, 0.2 * h),
            normal: Vector2::new(0.8, 0.6),
            mode: CollarMode::ClosestPoint,
        };
        for robin in [RobinData::dirichlet(0.0), RobinData::neumann(0.0)] {
            let scaled = solve_min_norm(&assemble_constraints(&pts, &c, &robin, &BasisConfig::new(5, h, xk)))
                .unwrap();
            let raw = solve_min_norm(&assemble_constraints(&pts, &c, &robin, &BasisConfig::new(5, 1.0, xk)))
                .unwrap();
            assert!(
                (&scaled - &raw).norm() <= 1e-8 * scaled.norm(),
                "{} vs {}",
                scaled,
                raw
            );
        }
    }

    proptest! {
        #[test]
        fn min_norm_is_exact_and_orthogonal_to_null_space(
            px in 0.0f64..1.0, py in 0.0f64..1.0, nx in -1.0f64..1.0, extra in 0usize..6,
            dirichlet in 0.0f64..1.0,
        ) {
            let h = 0.01;
            let xk = Point::zeros();
            let pts = lattice_points(h, xk, extra);
            let ny = (1.0 - nx * nx).sqrt();
            let c = CollarPoint {
                ghost: xk,
                point: Point::new(px * h, py * h),
                normal: Vector2::new(nx, ny),
                mode: CollarMode::ClosestPoint,
            };
            let robin = RobinData { dirichlet, neumann: 1.0 - dirichlet, value: 0.0 };
            let cm = assemble_constraints(&pts, &c, &robin, &BasisConfig::new(5, h, xk));
            let a = solve_min_norm(&cm).unwrap();
            let residual = (&cm.matrix * &a - &cm.rhs).norm();
            prop_assert!(residual <= 1e-10 * cm.rhs.norm());
            // Orthogonality to null(C): a lies in the row space of C.
            let svd = cm.matrix.clone().svd(false, true);
            let vt = svd.v_t.unwrap();
            let row_space = vt.rows(0, cm.matrix.nrows()).transpose();
            let projected = &row_space * (row_space.transpose() * &a);
            prop_assert!((&a - projected).norm() <= 1e-10 * a.norm());
        }
    }
}
