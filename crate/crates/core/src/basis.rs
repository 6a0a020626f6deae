//! Shifted, scaled monomials `((x - x_k)/h)^ax ((y - y_k)/h)^ay` spanning the
//! polynomials of total degree `< order`, and the Robin operator applied to them.

use nalgebra::Vector2;
use serde::Serialize;

use crate::geometry::{CollarPoint, Point};

/// Default reconstruction order: exact on quartics.
pub const DEFAULT_ORDER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct MultiIndex {
    pub ax: u32,
    pub ay: u32,
}

impl MultiIndex {
    pub const fn new(ax: u32, ay: u32) -> Self {
        MultiIndex { ax, ay }
    }

    pub fn degree(&self) -> u32 {
        self.ax + self.ay
    }
}

/// Number of monomials of total degree `< order`: `order (order + 1) / 2`.
pub fn basis_size(order: usize) -> usize {
    order * (order + 1) / 2
}

/// Monomial exponents ordered by total degree, then by `ax` descending.
pub fn enumerate_basis(order: usize) -> Vec<MultiIndex> {
    assert!(order >= 2, "basis order must be at least 2");
    let mut out = Vec::with_capacity(basis_size(order));
    for degree in 0..order as u32 {
        for ax in (0..=degree).rev() {
            out.push(MultiIndex::new(ax, degree - ax));
        }
    }
    out
}

/// Centre and length scale of the local basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisConfig {
    pub order: usize,
    /// Scaling length; `1.0` gives the raw monomials `(x - x_k)^alpha`.
    pub scale: f64,
    pub center: Point,
}

impl BasisConfig {
    pub fn new(order: usize, scale: f64, center: Point) -> Self {
        assert!(order >= 2 && scale > 0.0);
        BasisConfig {
            order,
            scale,
            center,
        }
    }

    fn local(&self, x: Point) -> (f64, f64) {
        (
            (x.x - self.center.x) / self.scale,
            (x.y - self.center.y) / self.scale,
        )
    }
}

/// Robin data `a_D phi + a_N dphi/dn = g` at one boundary point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobinData {
    pub dirichlet: f64,
    pub neumann: f64,
    pub value: f64,
}

impl RobinData {
    pub fn dirichlet(value: f64) -> Self {
        RobinData {
            dirichlet: 1.0,
            neumann: 0.0,
            value,
        }
    }

    pub fn neumann(value: f64) -> Self {
        RobinData {
            dirichlet: 0.0,
            neumann: 1.0,
            value,
        }
    }
}

fn ipow(base: f64, exp: u32) -> f64 {
    base.powi(exp as i32)
}

pub fn eval_monomial(alpha: MultiIndex, x: Point, cfg: &BasisConfig) -> f64 {
    let (u, v) = cfg.local(x);
    ipow(u, alpha.ax) * ipow(v, alpha.ay)
}

/// Gradient of the scaled monomial in physical coordinates.
pub fn monomial_gradient(alpha: MultiIndex, x: Point, cfg: &BasisConfig) -> Vector2<f64> {
    let (u, v) = cfg.local(x);
    let dx = if alpha.ax == 0 {
        0.0
    } else {
        alpha.ax as f64 * ipow(u, alpha.ax - 1) * ipow(v, alpha.ay) / cfg.scale
    };
    let dy = if alpha.ay == 0 {
        0.0
    } else {
        alpha.ay as f64 * ipow(u, alpha.ax) * ipow(v, alpha.ay - 1) / cfg.scale
    };
    Vector2::new(dx, dy)
}

/// `a_D psi(p) + a_N grad psi(p) · n(p)` for the monomial `alpha`.
pub fn boundary_action(
    alpha: MultiIndex,
    collar: &CollarPoint,
    robin: &RobinData,
    cfg: &BasisConfig,
) -> f64 {
    let p = collar.point;
    let mut out = 0.0;
    if robin.dirichlet != 0.0 {
        out += robin.dirichlet * eval_monomial(alpha, p, cfg);
    }
    if robin.neumann != 0.0 {
        out += robin.neumann * monomial_gradient(alpha, p, cfg).dot(&collar.normal);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CollarMode;
    use proptest::prelude::*;

    fn collar_at(point: Point, normal: Vector2<f64>) -> CollarPoint {
        CollarPoint {
            ghost: Point::zeros(),
            point,
            normal,
            mode: CollarMode::ClosestPoint,
        }
    }

    #[test]
    fn enumeration_order_and_size() {
        assert_eq!(
            enumerate_basis(2),
            vec![
                MultiIndex::new(0, 0),
                MultiIndex::new(1, 0),
                MultiIndex::new(0, 1)
            ]
        );
        let b3 = enumerate_basis(3);
        assert_eq!(b3.len(), 6);
        assert_eq!(b3.iter().map(|a| a.degree()).max(), Some(2));
        let b5 = enumerate_basis(5);
        assert_eq!(b5.len(), 15);
        assert_eq!(basis_size(5), 15);
        let unique: std::collections::HashSet<_> = b5.iter().collect();
        assert_eq!(unique.len(), 15);
    }

    #[test]
    fn monomial_values() {
        let h = 0.01;
        let c = Point::new(0.3, -0.2);
        let cfg = BasisConfig::new(5, h, c);
        assert_eq!(eval_monomial(MultiIndex::new(0, 0), Point::new(9.0, 9.0), &cfg), 1.0);
        let v = eval_monomial(MultiIndex::new(1, 0), c + Vector2::new(h, 0.0), &cfg);
        assert!((v - 1.0).abs() < 1e-12);
        let v = eval_monomial(MultiIndex::new(2, 1), c + Vector2::new(2.0 * h, -h), &cfg);
        assert!((v + 4.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_action_examples() {
        let h = 0.05;
        let xk = Point::new(0.1, 0.2);
        let cfg = BasisConfig::new(5, h, xk);
        let collar = collar_at(xk, Vector2::new(1.0, 0.0));
        assert_eq!(
            boundary_action(MultiIndex::new(0, 0), &collar, &RobinData::dirichlet(0.0), &cfg),
            1.0
        );
        let v = boundary_action(MultiIndex::new(1, 0), &collar, &RobinData::neumann(0.0), &cfg);
        assert!((v - 1.0 / h).abs() < 1e-12);

        // alpha = (2,0), a_D = a_N = 1, p - x_k = (delta, 0).
        let delta = 0.013;
        let n = Vector2::new(0.6, 0.8);
        let collar = collar_at(xk + Vector2::new(delta, 0.0), n);
        let robin = RobinData {
            dirichlet: 1.0,
            neumann: 1.0,
            value: 0.0,
        };
        let got = boundary_action(MultiIndex::new(2, 0), &collar, &robin, &cfg);
        let expected = (delta / h).powi(2) + 2.0 * n.x * delta / (h * h);
        assert!((got - expected).abs() < 1e-12 * expected.abs());
    }

    #[test]
    fn completeness_reproduces_polynomials() {
        // q(x) = sum c_alpha ((x - c)/h)^alpha evaluated two ways.
        let cfg = BasisConfig::new(5, 0.1, Point::new(0.2, -0.1));
        let basis = enumerate_basis(5);
        let coeffs: Vec<f64> = (0..basis.len()).map(|m| (m as f64 * 0.37).sin()).collect();
        for p in [Point::new(0.5, 0.4), Point::new(-0.3, 0.0), Point::new(0.21, -0.09)] {
            let (u, v) = ((p.x - 0.2) / 0.1, (p.y + 0.1) / 0.1);
            let direct: f64 = basis
                .iter()
                .zip(&coeffs)
                .map(|(a, c)| c * u.powi(a.ax as i32) * v.powi(a.ay as i32))
                .sum();
            let via: f64 = basis
                .iter()
                .zip(&coeffs)
                .map(|(a, c)| c * eval_monomial(*a, p, &cfg))
                .sum();
            assert!((direct - via).abs() <= 1e-13 * direct.abs().max(1.0));
        }
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(
            x in -1.0f64..1.0, y in -1.0f64..1.0, h in 0.01f64..0.5
        ) {
            let cfg = BasisConfig::new(5, h, Point::new(0.1, -0.3));
            let p = Point::new(x, y);
            let e = 1e-6 * h;
            for alpha in enumerate_basis(5) {
                let g = monomial_gradient(alpha, p, &cfg);
                let fx = (eval_monomial(alpha, p + Vector2::new(e, 0.0), &cfg)
                    - eval_monomial(alpha, p - Vector2::new(e, 0.0), &cfg)) / (2.0 * e);
                let fy = (eval_monomial(alpha, p + Vector2::new(0.0, e), &cfg)
                    - eval_monomial(alpha, p - Vector2::new(0.0, e), &cfg)) / (2.0 * e);
                let scale = g.norm().max(eval_monomial(alpha, p, &cfg).abs() / h).max(1.0 / h);
                prop_assert!((g.x - fx).abs() <= 1e-7 * scale);
                prop_assert!((g.y - fy).abs() <= 1e-7 * scale);
            }
        }

        #[test]
        fn scaling_covariance(dx in -3.0f64..3.0, dy in -3.0f64..3.0, h in 0.01f64..0.2) {
            let c = Point::new(0.05, 0.07);
            let fine = BasisConfig::new(5, h, c);
            let coarse = BasisConfig::new(5, 2.0 * h, c);
            for alpha in enumerate_basis(5) {
                let a = eval_monomial(alpha, c + Vector2::new(dx, dy), &fine);
                let b = eval_monomial(alpha, c + Vector2::new(2.0 * dx, 2.0 * dy), &coarse);
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }
}
