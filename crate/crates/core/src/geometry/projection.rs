//! Boundary (collar) points attached to ghost nodes.

use nalgebra::Vector2;
use serde::Serialize;

use super::grid::Point;
use super::level_set::LevelSet;
use crate::error::{Error, Result};

/// Target residual `|phi(p)|` for a projected boundary point.
pub const PROJECTION_TOL: f64 = 1e-12;
pub const MAX_PROJECTION_ITERATIONS: usize = 100;
/// Tangential residual, relative to `|x - p|`, accepted as orthogonal.
const ALIGNMENT_TOL: f64 = 1e-10;
const MIN_GRADIENT: f64 = 1e-14;
/// Axis rays are searched up to this many grid spacings.
pub const AXIS_SEARCH_SPACINGS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CollarMode {
    ClosestPoint,
    AxisProjected,
}

impl CollarMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CollarMode::ClosestPoint => "closest-point",
            CollarMode::AxisProjected => "axis-projected",
        }
    }
}

/// A boundary point `p_k` paired with the ghost position `x_k` it serves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollarPoint {
    pub ghost: Point,
    pub point: Point,
    /// Outward unit normal at `point`.
    pub normal: Vector2<f64>,
    pub mode: CollarMode,
}

impl CollarPoint {
    /// `x_k - p_k`.
    pub fn displacement(&self) -> Vector2<f64> {
        self.ghost - self.point
    }

    /// `p_k - x_k`, pointing from the ghost into the domain.
    pub fn inward(&self) -> Vector2<f64> {
        self.point - self.ghost
    }

    /// Unit vector from the ghost towards the domain; the inner normal when
    /// the ghost sits on the boundary itself.
    pub fn direction(&self) -> Vector2<f64> {
        let d = self.inward();
        let len = d.norm();
        if len > 1e-13 * self.ghost.norm().max(1.0) {
            d / len
        } else {
            -self.normal
        }
    }
}

fn checked_gradient(level_set: &dyn LevelSet, p: Point) -> Result<Vector2<f64>> {
    let g = level_set.gradient(p);
    if g.norm() < MIN_GRADIENT || !g.iter().all(|c| c.is_finite()) {
        return Err(Error::ZeroGradient { x: p.x, y: p.y });
    }
    Ok(g)
}

fn unit_normal(level_set: &dyn LevelSet, p: Point) -> Result<Vector2<f64>> {
    let g = checked_gradient(level_set, p)?;
    Ok(g / g.norm())
}

/// One Newton-type step along the gradient towards `phi = 0`, halving the
/// step until `|phi|` decreases.
fn surface_step(level_set: &dyn LevelSet, p: Point, value: f64) -> Result<Point> {
    let g = checked_gradient(level_set, p)?;
    let step = g * (value / g.norm_squared());
    let mut t = 1.0;
    loop {
        let q = p - step * t;
        if level_set.value(q).abs() < value.abs() || t < 1e-6 {
            return Ok(q);
        }
        t *= 0.5;
    }
}

/// Closest boundary point to `x`.
///
/// Alternates a damped gradient step onto `{phi = 0}` with a tangential
/// correction that removes the component of `x - p` along the tangent, so
/// the result satisfies both `|phi(p)| <= 1e-12` and `x - p ∥ n(p)`.
pub fn project_to_boundary(x: Point, level_set: &dyn LevelSet) -> Result<CollarPoint> {
    let mut p = x;
    for _ in 0..MAX_PROJECTION_ITERATIONS {
        let value = level_set.value(p);
        if value.abs() > PROJECTION_TOL {
            p = surface_step(level_set, p, value)?;
            continue;
        }
        let n = unit_normal(level_set, p)?;
        let v = x - p;
        let tangential = v - n * v.dot(&n);
        if tangential.norm() <= ALIGNMENT_TOL * v.norm() + f64::EPSILON * 1e-2 {
            return Ok(CollarPoint {
                ghost: x,
                point: p,
                normal: n,
                mode: CollarMode::ClosestPoint,
            });
        }
        p += tangential;
    }
    Err(Error::ProjectionDiverged {
        x: x.x,
        y: x.y,
        residual: level_set.value(p).abs(),
    })
}

/// Boundary point reached along one of the four axis rays from `x`, the
/// closest one when several rays cross within `3h`.
pub fn axis_projection(x: Point, level_set: &dyn LevelSet, h: f64) -> Result<CollarPoint> {
    let start = level_set.value(x);
    let directions = [
        Vector2::new(1.0, 0.0),
        Vector2::new(-1.0, 0.0),
        Vector2::new(0.0, 1.0),
        Vector2::new(0.0, -1.0),
    ];
    let reach = AXIS_SEARCH_SPACINGS * h;
    let samples = 24;
    let mut best: Option<(f64, Point)> = None;

    for dir in directions {
        let mut lo = 0.0;
        let mut crossing = None;
        for s in 1..=samples {
            let hi = reach * s as f64 / samples as f64;
            let v = level_set.value(x + dir * hi);
            if v == 0.0 || v.signum() != start.signum() {
                crossing = Some((lo, hi));
                break;
            }
            lo = hi;
        }
        let Some((mut lo, mut hi)) = crossing else {
            continue;
        };
        if best.is_some_and(|(d, _)| d <= lo) {
            continue;
        }
        let mut root = hi;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = level_set.value(x + dir * mid);
            root = mid;
            if v.abs() <= PROJECTION_TOL || mid == lo || mid == hi {
                break;
            }
            if v.signum() == start.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if best.is_none_or(|(d, _)| root < d) {
            best = Some((root, x + dir * root));
        }
    }

    let (_, point) = best.ok_or(Error::NoAxisIntersection { x: x.x, y: x.y })?;
    Ok(CollarPoint {
        ghost: x,
        point,
        normal: unit_normal(level_set, point)?,
        mode: CollarMode::AxisProjected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::level_set::{Annulus, Circle, Flower, Hourglass, Leaf};

    fn circle() -> Circle {
        Circle::new(Point::zeros(), 0.5)
    }

    #[test]
    fn radial_projection_on_circle() {
        let c = project_to_boundary(Point::new(0.7, 0.0), &circle()).unwrap();
        assert!((c.point - Point::new(0.5, 0.0)).norm() < 1e-15);
        assert!((c.normal - Vector2::new(1.0, 0.0)).norm() < 1e-15);

        let c = project_to_boundary(Point::new(0.6, 0.6), &circle()).unwrap();
        let s = 0.5 / 2f64.sqrt();
        assert!((c.point - Point::new(s, s)).norm() < 1e-14);
        assert_eq!(c.mode, CollarMode::ClosestPoint);
    }

    #[test]
    fn flower_projection_is_orthogonal() {
        let flower = Flower;
        // Just outside a petal tip and in a concave notch.
        let (x0, y0) = (0.03 * 3f64.sqrt(), 0.04 * 2f64.sqrt());
        for (theta, r) in [(0.3141592653589793, 0.72), (0.9424777960769379, 0.33), (2.0, 0.6)] {
            let x = Point::new(x0 + r * f64::cos(theta), y0 + r * f64::sin(theta));
            assert!(flower.value(x) > 0.0);
            let c = project_to_boundary(x, &flower).unwrap();
            assert!(flower.value(c.point).abs() <= PROJECTION_TOL);
            let d = c.displacement();
            let angle = (d.normalize().dot(&c.normal)).clamp(-1.0, 1.0).acos();
            assert!(angle < 1e-6, "angle {angle}");
            assert!((c.normal.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hourglass_projection_converges() {
        let x = Point::new(0.4, 0.8);
        assert!(Hourglass.value(x) > 0.0);
        let c = project_to_boundary(x, &Hourglass).unwrap();
        assert!(Hourglass.value(c.point).abs() <= PROJECTION_TOL);
    }

    #[test]
    fn annulus_inner_normal_points_to_origin() {
        let a = Annulus::new(0.4, 0.9);
        let c = project_to_boundary(Point::new(0.1, 0.2), &a).unwrap();
        assert!((c.point.norm() - 0.4).abs() < 1e-14);
        assert!(c.normal.dot(&c.point) < 0.0);
    }

    #[test]
    fn axis_projection_on_circle() {
        let h = 0.0125;
        let c = axis_projection(Point::new(0.52, 0.1), &circle(), h).unwrap();
        assert!((c.point - Point::new(0.24f64.sqrt(), 0.1)).norm() < 1e-12);
        assert!(circle().value(c.point).abs() <= PROJECTION_TOL);
        assert_eq!(c.mode, CollarMode::AxisProjected);

        let c = axis_projection(Point::new(0.0, 0.52), &circle(), h).unwrap();
        assert!((c.point - Point::new(0.0, 0.5)).norm() < 1e-12);
    }

    #[test]
    fn axis_projection_far_from_boundary_fails() {
        let err = axis_projection(Point::new(0.9, 0.9), &circle(), 0.0125).unwrap_err();
        assert!(matches!(err, Error::NoAxisIntersection { .. }));
    }

    #[test]
    fn zero_gradient_is_reported() {
        let saddle = Point::new(0.03 * 3f64.sqrt(), 0.04 * 2f64.sqrt());
        // Exactly at the saddle phi = 0 and the gradient vanishes.
        let err = project_to_boundary(saddle + Vector2::new(0.0, 0.0), &Hourglass);
        assert!(matches!(err, Err(Error::ZeroGradient { .. })));
    }

    #[test]
    fn leaf_tip_projection_lands_on_boundary() {
        let leaf = Leaf::default();
        // Outside the lower-left tip where the two arcs meet.
        let x = Point::new(-0.47, 0.47);
        match project_to_boundary(x, &leaf) {
            Ok(c) => assert!(leaf.value(c.point).abs() <= PROJECTION_TOL),
            Err(Error::ProjectionDiverged { .. }) => {
                let c = axis_projection(x, &leaf, 0.0125).unwrap();
                assert!(leaf.value(c.point).abs() <= PROJECTION_TOL);
            }
            Err(e) => panic!("{e}"),
        }
    }
}
