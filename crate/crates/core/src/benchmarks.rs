//! Benchmark problems with closed-form solutions.

use std::fmt;
use std::sync::Arc;

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assembly::ProblemCoefficients;
use crate::basis::RobinData;
use crate::error::{Error, Result};
use crate::geometry::{
    project_to_boundary, Annulus, CollarPoint, Flower, Grid, Hourglass, Leaf, LevelSet, Point,
};

/// Inner radius of the reference annulus, `√5/5`.
pub fn inner_radius() -> f64 {
    5f64.sqrt() / 5.0
}

/// Outer radius of the reference annulus, `√3/2`.
pub fn outer_radius() -> f64 {
    3f64.sqrt() / 2.0
}

pub fn reference_annulus() -> Annulus {
    Annulus::new(inner_radius(), outer_radius())
}

/// Value, gradient and Laplacian of a closed-form solution.
pub trait ExactSolution: Send + Sync {
    fn value(&self, p: Point) -> f64;
    fn gradient(&self, p: Point) -> Vector2<f64>;
    fn laplacian(&self, p: Point) -> f64;
}

/// `f(r)` together with `f'(r)` and `f''(r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialProfile {
    /// `R2 log(r / R1)`.
    Log { r1: f64, r2: f64 },
    /// `r/(u0 - k) + r0/u0 + C r^(u0/k)`.
    Convective { kappa: f64, u0: f64, r0: f64, c: f64 },
    /// `-(r + r0 log r)/k + C`.
    Diffusive { kappa: f64, r0: f64, c: f64 },
    /// `-(r log r - r0)/k + C r`.
    Balanced { kappa: f64, r0: f64, c: f64 },
}

impl RadialProfile {
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        match *self {
            RadialProfile::Log { r1, r2 } => (r2 * (r / r1).ln(), r2 / r, -r2 / (r * r)),
            RadialProfile::Convective { kappa, u0, r0, c } => {
                let m = u0 / kappa;
                let rm = r.powf(m);
                (
                    r / (u0 - kappa) + r0 / u0 + c * rm,
                    1.0 / (u0 - kappa) + c * m * rm / r,
                    c * m * (m - 1.0) * rm / (r * r),
                )
            }
            RadialProfile::Diffusive { kappa, r0, c } => (
                -(r + r0 * r.ln()) / kappa + c,
                -(1.0 + r0 / r) / kappa,
                r0 / (kappa * r * r),
            ),
            RadialProfile::Balanced { kappa, r0, c } => (
                -(r * r.ln() - r0) / kappa + c * r,
                -(r.ln() + 1.0) / kappa + c,
                -1.0 / (kappa * r),
            ),
        }
    }
}

impl ExactSolution for RadialProfile {
    fn value(&self, p: Point) -> f64 {
        self.eval(p.norm()).0
    }

    fn gradient(&self, p: Point) -> Vector2<f64> {
        let r = p.norm();
        p * (self.eval(r).1 / r)
    }

    fn laplacian(&self, p: Point) -> f64 {
        let r = p.norm();
        let (_, d1, d2) = self.eval(r);
        d2 + d1 / r
    }
}

/// `sin(2x) sin(5y)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SineProduct;

impl ExactSolution for SineProduct {
    fn value(&self, p: Point) -> f64 {
        (2.0 * p.x).sin() * (5.0 * p.y).sin()
    }

    fn gradient(&self, p: Point) -> Vector2<f64> {
        Vector2::new(
            2.0 * (2.0 * p.x).cos() * (5.0 * p.y).sin(),
            5.0 * (2.0 * p.x).sin() * (5.0 * p.y).cos(),
        )
    }

    fn laplacian(&self, p: Point) -> f64 {
        -29.0 * self.value(p)
    }
}

/// `sum c_ab x^a y^b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub terms: Vec<(u32, u32, f64)>,
}

impl Polynomial {
    /// Fixed quartic with every monomial of degree `<= 4` present.
    pub fn reference_quartic() -> Self {
        Polynomial {
            terms: vec![
                (0, 0, 1.0),
                (1, 0, 0.5),
                (0, 1, -0.3),
                (2, 0, 0.7),
                (1, 1, -0.4),
                (0, 2, 0.2),
                (3, 0, 0.3),
                (2, 1, -0.6),
                (1, 2, 0.1),
                (0, 3, 0.25),
                (4, 0, 0.4),
                (3, 1, -0.2),
                (2, 2, 0.35),
                (1, 3, 0.15),
                (0, 4, -0.3),
            ],
        }
    }

    fn pow(v: f64, e: i64) -> f64 {
        if e < 0 {
            0.0
        } else {
            v.powi(e as i32)
        }
    }
}

impl ExactSolution for Polynomial {
    fn value(&self, p: Point) -> f64 {
        self.terms
            .iter()
            .map(|&(a, b, c)| c * Self::pow(p.x, a as i64) * Self::pow(p.y, b as i64))
            .sum()
    }

    fn gradient(&self, p: Point) -> Vector2<f64> {
        self.terms.iter().fold(Vector2::zeros(), |acc, &(a, b, c)| {
            let (a, b) = (a as i64, b as i64);
            acc + Vector2::new(
                c * a as f64 * Self::pow(p.x, a - 1) * Self::pow(p.y, b),
                c * b as f64 * Self::pow(p.x, a) * Self::pow(p.y, b - 1),
            )
        })
    }

    fn laplacian(&self, p: Point) -> f64 {
        self.terms
            .iter()
            .map(|&(a, b, c)| {
                let (a, b) = (a as i64, b as i64);
                c * ((a * (a - 1)) as f64 * Self::pow(p.x, a - 2) * Self::pow(p.y, b)
                    + (b * (b - 1)) as f64 * Self::pow(p.x, a) * Self::pow(p.y, b - 2))
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ComplexDomain {
    Leaf,
    Flower,
    Hourglass,
}

impl ComplexDomain {
    pub const ALL: [ComplexDomain; 3] = [ComplexDomain::Leaf, ComplexDomain::Flower, ComplexDomain::Hourglass];

    pub fn as_str(&self) -> &'static str {
        match self {
            ComplexDomain::Leaf => "leaf",
            ComplexDomain::Flower => "flower",
            ComplexDomain::Hourglass => "hourglass",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        ComplexDomain::ALL
            .into_iter()
            .find(|d| d.as_str() == name)
            .ok_or_else(|| Error::UnknownDomain(name.to_string()))
    }

    pub fn level_set(&self) -> Arc<dyn LevelSet> {
        match self {
            ComplexDomain::Leaf => Arc::new(Leaf::default()),
            ComplexDomain::Flower => Arc::new(Flower),
            ComplexDomain::Hourglass => Arc::new(Hourglass),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum BenchmarkKind {
    Annulus,
    Complex { domain: ComplexDomain },
    ConvectionDiffusion { kappa: f64, u0: f64 },
    Polynomial,
}

/// Global and cell Péclet numbers of a convection-diffusion benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peclet {
    /// `u0 R2 / k`.
    pub global: f64,
    /// `u0 h / k`.
    pub local: f64,
    /// Rounded value quoted for the two boundary-layer presets.
    pub nominal: Option<f64>,
}

/// A complete problem: domain, coefficients and exact solution.
#[derive(Clone)]
pub struct Benchmark {
    pub name: String,
    pub kind: BenchmarkKind,
    pub level_set: Arc<dyn LevelSet>,
    pub coefficients: ProblemCoefficients,
    pub exact: Arc<dyn ExactSolution>,
}

impl fmt::Debug for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Benchmark")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .finish_non_exhaustive()
    }
}

/// Preset names accepted by [`by_name`].
pub const CATALOG: [&str; 10] = [
    "annulus",
    "leaf",
    "flower",
    "hourglass",
    "polynomial",
    "case1",
    "case2",
    "case3",
    "boundary-layer-10",
    "boundary-layer-25",
];

pub fn by_name(name: &str) -> Result<Benchmark> {
    match name {
        "annulus" => Ok(annulus_homogeneous()),
        "leaf" | "flower" | "hourglass" => complex_domain(name),
        "polynomial" => Ok(polynomial_manufactured()),
        "case1" => convection_diffusion(2.0, 1.0),
        "case2" => convection_diffusion(1.0, 0.0),
        "case3" => convection_diffusion(1.0, 1.0),
        "boundary-layer-10" => convection_diffusion(1.0, 10.0),
        "boundary-layer-25" => convection_diffusion(1.0, 25.0),
        other => Err(Error::UnknownDomain(other.to_string())),
    }
}

fn on_inner_circle(c: &CollarPoint) -> bool {
    c.point.norm() < 0.5 * (inner_radius() + outer_radius())
}

fn zero_velocity() -> Arc<crate::assembly::VectorField> {
    Arc::new(|_| Vector2::zeros())
}

/// Laplace equation on the annulus: `φ = 0` on the inner circle, `∂φ/∂n = 1`
/// on the outer one; `φ = R2 log(r / R1)`.
pub fn annulus_homogeneous() -> Benchmark {
    let boundary = Arc::new(|c: &CollarPoint| {
        if on_inner_circle(c) {
            RobinData::dirichlet(0.0)
        } else {
            RobinData::neumann(1.0)
        }
    });
    Benchmark {
        name: "annulus".into(),
        kind: BenchmarkKind::Annulus,
        level_set: Arc::new(reference_annulus()),
        coefficients: ProblemCoefficients::new(1.0, zero_velocity(), Arc::new(|_| 0.0), boundary)
            .expect("positive diffusion"),
        exact: Arc::new(RadialProfile::Log {
            r1: inner_radius(),
            r2: outer_radius(),
        }),
    }
}

/// Poisson problem with `φ = sin(2x) sin(5y)`: Dirichlet where `x >= 0`,
/// Neumann elsewhere.
pub fn complex_domain(name: &str) -> Result<Benchmark> {
    let domain = ComplexDomain::from_name(name)?;
    let exact = SineProduct;
    let boundary = Arc::new(move |c: &CollarPoint| {
        if c.point.x >= 0.0 {
            RobinData::dirichlet(exact.value(c.point))
        } else {
            RobinData::neumann(exact.gradient(c.point).dot(&c.normal))
        }
    });
    let source = Arc::new(|p: Point| 29.0 * (2.0 * p.x).sin() * (5.0 * p.y).sin());
    Ok(Benchmark {
        name: domain.as_str().into(),
        kind: BenchmarkKind::Complex { domain },
        level_set: domain.level_set(),
        coefficients: ProblemCoefficients::new(1.0, zero_velocity(), source, boundary)?,
        exact: Arc::new(exact),
    })
}

/// Radial convection-diffusion on the annulus with `U = u0 x / r²`,
/// `f = 1/r` and homogeneous Dirichlet data on both circles.
pub fn convection_diffusion(kappa: f64, u0: f64) -> Result<Benchmark> {
    if !(kappa > 0.0 && kappa.is_finite() && u0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "convection-diffusion needs kappa > 0 and finite u0, got kappa={kappa}, u0={u0}"
        )));
    }
    let (r1, r2) = (inner_radius(), outer_radius());
    let (l1, l2) = (r1.ln(), r2.ln());
    let profile = if u0 == 0.0 {
        RadialProfile::Diffusive {
            kappa,
            r0: -(r2 - r1) / (l2 - l1),
            c: -(r2 * l1 - r1 * l2) / (kappa * (l2 - l1)),
        }
    } else if u0 == kappa {
        RadialProfile::Balanced {
            kappa,
            r0: -r1 * r2 * (l2 - l1) / (r2 - r1),
            c: (r2 * l2 - r1 * l1) / (kappa * (r2 - r1)),
        }
    } else {
        let m = u0 / kappa;
        let (p1, p2) = (r1.powf(m), r2.powf(m));
        RadialProfile::Convective {
            kappa,
            u0,
            r0: u0 / (kappa - u0) * (r1 * p2 - r2 * p1) / (p2 - p1),
            c: (r2 - r1) / ((kappa - u0) * (p2 - p1)),
        }
    };
    let velocity = Arc::new(move |p: Point| p * (u0 / p.norm_squared()));
    let source = Arc::new(|p: Point| 1.0 / p.norm());
    let boundary = Arc::new(|_: &CollarPoint| RobinData::dirichlet(0.0));
    Ok(Benchmark {
        name: format!("convection-diffusion(kappa={kappa}, u0={u0})"),
        kind: BenchmarkKind::ConvectionDiffusion { kappa, u0 },
        level_set: Arc::new(reference_annulus()),
        coefficients: ProblemCoefficients::new(kappa, velocity, source, boundary)?,
        exact: Arc::new(profile),
    })
}

/// Quartic manufactured solution on the annulus with `k = 1`, `U = (1, 1)`,
/// Dirichlet data on the inner circle and Neumann data on the outer one.
pub fn polynomial_manufactured() -> Benchmark {
    let poly = Arc::new(Polynomial::reference_quartic());
    let velocity = Vector2::new(1.0, 1.0);
    let q = poly.clone();
    let source = Arc::new(move |p: Point| -q.laplacian(p) + velocity.dot(&q.gradient(p)));
    let q = poly.clone();
    let boundary = Arc::new(move |c: &CollarPoint| {
        if on_inner_circle(c) {
            RobinData::dirichlet(q.value(c.point))
        } else {
            RobinData::neumann(q.gradient(c.point).dot(&c.normal))
        }
    });
    Benchmark {
        name: "polynomial".into(),
        kind: BenchmarkKind::Polynomial,
        level_set: Arc::new(reference_annulus()),
        coefficients: ProblemCoefficients::new(1.0, Arc::new(move |_| velocity), source, boundary)
            .expect("positive diffusion"),
        exact: poly,
    }
}

/// Largest scaled residual found by [`Benchmark::self_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfCheck {
    pub pde_residual: f64,
    pub boundary_residual: f64,
    pub interior_samples: usize,
    pub boundary_samples: usize,
}

/// Tolerance on the scaled residuals of [`Benchmark::self_check`].
pub const SELF_CHECK_TOL: f64 = 1e-8;

impl Benchmark {
    /// `-k Δφ + U·∇φ - f` divided by the largest of its terms (at least 1).
    pub fn pde_residual(&self, p: Point) -> f64 {
        let c = &self.coefficients;
        let diffusion = -c.diffusion() * self.exact.laplacian(p);
        let convection = c.velocity(p).dot(&self.exact.gradient(p));
        let f = c.source(p);
        let scale = diffusion.abs().max(convection.abs()).max(f.abs()).max(1.0);
        (diffusion + convection - f).abs() / scale
    }

    /// `a_D φ + a_N ∇φ·n - g` at a boundary point, scaled like [`Self::pde_residual`].
    pub fn boundary_residual(&self, collar: &CollarPoint) -> f64 {
        let robin = (self.coefficients.boundary())(collar);
        let value = robin.dirichlet * self.exact.value(collar.point);
        let flux = robin.neumann * self.exact.gradient(collar.point).dot(&collar.normal);
        let scale = value.abs().max(flux.abs()).max(robin.value.abs()).max(1.0);
        (value + flux - robin.value).abs() / scale
    }

    /// Checks the exact solution against the PDE at random interior points
    /// and against the boundary data at random projected boundary points.
    pub fn self_check(&self, samples: usize, seed: u64) -> Result<SelfCheck> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut check = SelfCheck {
            pde_residual: 0.0,
            boundary_residual: 0.0,
            interior_samples: 0,
            boundary_samples: 0,
        };
        let mut attempts = 0;
        while (check.interior_samples < samples || check.boundary_samples < samples) && attempts < 1000 * samples {
            attempts += 1;
            let p = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let phi = self.level_set.value(p);
            if phi < 0.0 && check.interior_samples < samples {
                check.pde_residual = check.pde_residual.max(self.pde_residual(p));
                check.interior_samples += 1;
            }
            if phi.abs() < 0.05 && check.boundary_samples < samples {
                if let Ok(collar) = project_to_boundary(p, self.level_set.as_ref()) {
                    check.boundary_residual = check.boundary_residual.max(self.boundary_residual(&collar));
                    check.boundary_samples += 1;
                }
            }
        }
        if check.pde_residual > SELF_CHECK_TOL || check.boundary_residual > SELF_CHECK_TOL {
            return Err(Error::InvalidParameter(format!(
                "benchmark {} fails its self-check: PDE residual {:e}, boundary residual {:e}",
                self.name, check.pde_residual, check.boundary_residual
            )));
        }
        Ok(check)
    }

    /// Péclet numbers on a grid; `None` for problems without convection.
    pub fn peclet_numbers(&self, grid: &Grid) -> Option<Peclet> {
        let BenchmarkKind::ConvectionDiffusion { kappa, u0 } = self.kind else {
            return None;
        };
        let nominal = if kappa == 1.0 && u0 == 10.0 {
            Some(8.0)
        } else if kappa == 1.0 && u0 == 25.0 {
            Some(20.0)
        } else {
            None
        };
        Some(Peclet {
            global: u0 * outer_radius() / kappa,
            local: u0 * grid.spacing() / kappa,
            nominal,
        })
    }
}
