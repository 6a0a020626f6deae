//! Analytic level-set fields. The domain is `{phi < 0}`, its boundary `{phi = 0}`.

use std::f64::consts::FRAC_PI_4;

use nalgebra::Vector2;

use super::grid::Point;

pub trait LevelSet: Send + Sync {
    fn name(&self) -> &str;

    fn value(&self, p: Point) -> f64;

    /// Analytic gradient. For fields built with `max`, the gradient of the
    /// active branch is returned.
    fn gradient(&self, p: Point) -> Vector2<f64>;

    /// Outward unit normal, `None` where the gradient vanishes.
    fn normal(&self, p: Point) -> Option<Vector2<f64>> {
        let g = self.gradient(p);
        let n = g.norm();
        (n >= 1e-14).then(|| g / n)
    }
}

/// `|x - c| - r`.
#[derive(Debug, Clone)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Point, radius: f64) -> Self {
        Circle { center, radius }
    }
}

impl LevelSet for Circle {
    fn name(&self) -> &str {
        "circle"
    }

    fn value(&self, p: Point) -> f64 {
        (p - self.center).norm() - self.radius
    }

    fn gradient(&self, p: Point) -> Vector2<f64> {
        let d = p - self.center;
        let r = d.norm();
        if r == 0.0 {
            Vector2::zeros()
        } else {
            d / r
        }
    }
}

/// `max(R1 - r, r - R2)`: negative strictly between the two radii.
#[derive(Debug, Clone)]
pub struct Annulus {
    pub inner: f64,
    pub outer: f64,
}

impl Annulus {
    pub fn new(inner: f64, outer: f64) -> Self {
        Annulus { inner, outer }
    }

    /// Radius separating the inner boundary piece from the outer one.
    pub fn mid_radius(&self) -> f64 {
        0.5 * (self.inner + self.outer)
    }
}

impl LevelSet for Annulus {
    fn name(&self) -> &str {
        "annulus"
    }

    fn value(&self, p: Point) -> f64 {
        let r = p.norm();
        (self.inner - r).max(r - self.outer)
    }

    fn gradient(&self, p: Point) -> Vector2<f64> {
        let r = p.norm();
        if r == 0.0 {
            return Vector2::zeros();
        }
        if self.inner - r >= r - self.outer {
            -p / r
        } else {
            p / r
        }
    }
}

/// `max(|x|, |y|) - a`: the open square of half-width `a`.
#[derive(Debug, Clone)]
pub struct Square {
    pub half_width: f64,
}

impl LevelSet for Square {
    fn name(&self) -> &str {
        "square"
    }

    fn value(&self, p: Point) -> f64 {
        p.x.abs().max(p.y.abs()) - self.half_width
    }

    fn gradient(&self, p: Point) -> Vector2<f64> {
        if p.x.abs() >= p.y.abs() {
            Vector2::new(p.x.signum(), 0.0)
        } else {
            Vector2::new(0.0, p.y.signum())
        }
    }
}

/// Intersection of two discs of radius 0.7 whose centres sit at ±0.25 along
/// the diagonal.
#[derive(Debug, Clone)]
pub struct Leaf {
    first: Point,
    second: Point,
    radius: f64,
}

impl Default for Leaf {
    fn default() -> Self {
        let (s, c) = FRAC_PI_4.sin_cos();
        Leaf {
            first: Point::new(-0.25 * c, -0.25 * s),
            second: Point::new(0.25 * c, 0.25 * s),
            radius: 0.7,
        }
    }
}

impl Leaf {
    pub fn centers(&self) -> (Point, Point) {
        (self.first, self.second)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl LevelSet for Leaf {
    fn name(&self) -> &str {
        "leaf"
    }

    fn value(&self, p: Point) -> f64 {
        let a = (p - self.first).norm() - self.radius;
        let b = (p - self.second).norm() - self.radius;
        a.max(b)
    }

    fn gradient(&self, p: Point) -> Vector2<f64> {
        let da = p - self.first;
        let db = p - self.second;
        let d = if da.norm() >= db.norm() { da } else { db };
        let r = d.norm();
        if r == 0.0 {
            Vector2::zeros()
        } else {
            d / r
        }
    }
}

fn shifted(p: Point) -> (f64, f64) {
    (p.x - 0.03 * 3f64.sqrt(), p.y - 0.04 * 2f64.sqrt())
}

/// Five-petal flower: `R - 0.5 - (Y⁵ + 5X⁴Y - 10X²Y³) / (5R⁵)` about a
/// slightly shifted origin.
#[derive(Debug, Clone, Default)]
pub struct Flower;

impl LevelSet for Flower {
    fn name(&self) -> &str {
        "flower"
    }

    fn value(&self, p: Point) -> f64 {
        let (x, y) = shifted(p);
        let r = x.hypot(y);
        let num = y.powi(5) + 5.0 * x.powi(4) * y - 10.0 * x * x * y.powi(3);
        r - 0.5 - num / (5.0 * r.powi(5))
    }

    fn gradient(&self, p: Point) -> Vector2<f64> {
        let (x, y) = shifted(p);
        let r = x.hypot(y);
        if r == 0.0 {
            return Vector2::zeros();
        }
        let num = y.powi(5) + 5.0 * x.powi(4) * y - 10.0 * x * x * y.powi(3);
        let num_x = 20.0 * x.powi(3) * y - 20.0 * x * y.powi(3);
        let num_y = 5.0 * y.powi(4) + 5.0 * x.powi(4) - 30.0 * x * x * y * y;
        let r5 = r.powi(5);
        let r7 = r.powi(7);
        Vector2::new(
            x / r - (num_x / r5 - 5.0 * num * x / r7) / 5.0,
            y / r - (num_y / r5 - 5.0 * num * y / r7) / 5.0,
        )
    }
}

/// Quartic with a saddle: `256Y⁴ - 16X⁴ - 128Y² + 36X²`.
#[derive(Debug, Clone, Default)]
pub struct Hourglass;

impl LevelSet for Hourglass {
    fn name(&self) -> &str {
        "hourglass"
    }

    fn value(&self, p: Point) -> f64 {
        let (x, y) = shifted(p);
        256.0 * y.powi(4) - 16.0 * x.powi(4) - 128.0 * y * y + 36.0 * x * x
    }

    fn gradient(&self, p: Point) -> Vector2<f64> {
        let (x, y) = shifted(p);
        Vector2::new(
            -64.0 * x.powi(3) + 72.0 * x,
            1024.0 * y.powi(3) - 256.0 * y,
        )
    }
}
