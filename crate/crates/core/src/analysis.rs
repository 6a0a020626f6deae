//! Error norms, gradient reconstruction, convergence orders and stencil statistics.

use std::collections::BTreeMap;

use nalgebra::Vector2;
use serde::Serialize;

use crate::benchmarks::ExactSolution;
use crate::boundary_ops::BoundaryOperatorRow;
use crate::error::{Error, Result};
use crate::geometry::{Classification, CollarMode};
use crate::stencils::{stencil_diameter, Stencil};

/// Fourth-order centred first-derivative weights on offsets `-2..=2`.
const GRADIENT_WEIGHTS: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];

/// `(∂x, ∂y)` at every interior node, in unknown order.
pub fn reconstruct_gradient(solution: &[f64], classification: &Classification) -> Result<Vec<Vector2<f64>>> {
    let grid = classification.grid();
    let h = grid.spacing();
    classification
        .interior()
        .iter()
        .map(|&node| {
            let mut g = Vector2::zeros();
            for (w, offset) in (-2i64..=2).enumerate() {
                if offset == 0 {
                    continue;
                }
                for (axis, (di, dj)) in [(offset, 0), (0, offset)].into_iter().enumerate() {
                    let u = grid
                        .offset(node, di, dj)
                        .and_then(|n| classification.unknown(n))
                        .ok_or(Error::MissingNeighbor {
                            i: node.i,
                            j: node.j,
                        })?;
                    g[axis] += GRADIENT_WEIGHTS[w] * solution[u];
                }
            }
            Ok(g / h)
        })
        .collect()
}

/// Solution and gradient errors over the interior nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorReport {
    pub n: usize,
    pub h: f64,
    pub l1: f64,
    pub linf: f64,
    pub grad_l1: f64,
    pub grad_linf: f64,
    /// False when `sum |φ^a|` vanished and `l1` is the plain sum.
    pub l1_relative: bool,
    pub grad_l1_relative: bool,
}

impl ErrorReport {
    /// `[l1, linf, grad_l1, grad_linf]`.
    pub fn norms(&self) -> [f64; 4] {
        [self.l1, self.linf, self.grad_l1, self.grad_linf]
    }
}

pub const NORM_NAMES: [&str; 4] = ["l1", "linf", "grad_l1", "grad_linf"];

pub fn compute_errors(
    solution: &[f64],
    exact: &dyn ExactSolution,
    classification: &Classification,
) -> Result<ErrorReport> {
    let grid = classification.grid();
    let gradients = reconstruct_gradient(solution, classification)?;
    let (mut err_sum, mut ref_sum, mut linf) = (0.0, 0.0, 0.0f64);
    let (mut gerr_sum, mut gref_sum, mut glinf) = (0.0, 0.0, 0.0f64);
    for (u, &node) in classification.interior().iter().enumerate() {
        let p = grid.point(node);
        let e = (solution[u] - exact.value(p)).abs();
        err_sum += e;
        ref_sum += exact.value(p).abs();
        linf = linf.max(e);
        let ga = exact.gradient(p);
        let ge = (gradients[u] - ga).norm();
        gerr_sum += ge;
        gref_sum += ga.norm();
        glinf = glinf.max(ge);
    }
    let relative = |num: f64, den: f64| if den > 0.0 { (num / den, true) } else { (num, false) };
    let (l1, l1_relative) = relative(err_sum, ref_sum);
    let (grad_l1, grad_l1_relative) = relative(gerr_sum, gref_sum);
    Ok(ErrorReport {
        n: grid.cells_per_side(),
        h: grid.spacing(),
        l1,
        linf,
        grad_l1,
        grad_linf: glinf,
        l1_relative,
        grad_l1_relative,
    })
}

/// Least-squares slope of `log(error)` against `log(h)`.
pub fn fit_order(h: &[f64], errors: &[f64]) -> Result<f64> {
    if h.len() != errors.len() || h.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 levels, got {}",
            h.len().min(errors.len())
        )));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::DegenerateFit(format!("non-positive error {e}")));
    }
    if h.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::DegenerateFit("non-positive spacing".into()));
    }
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 1e-24) {
        return Err(Error::DegenerateFit("grid spacings coincide".into()));
    }
    Ok(sxy / sxx)
}

/// `log(e_i / e_{i+1}) / log(h_i / h_{i+1})` for consecutive levels.
pub fn pairwise_orders(h: &[f64], errors: &[f64]) -> Vec<f64> {
    h.windows(2)
        .zip(errors.windows(2))
        .map(|(hw, ew)| (ew[0] / ew[1]).ln() / (hw[0] / hw[1]).ln())
        .collect()
}

/// Fitted slopes for the four norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Orders {
    pub l1: f64,
    pub linf: f64,
    pub grad_l1: f64,
    pub grad_linf: f64,
}

impl Orders {
    pub fn as_array(&self) -> [f64; 4] {
        [self.l1, self.linf, self.grad_l1, self.grad_linf]
    }
}

pub fn fit_orders(reports: &[ErrorReport]) -> Result<Orders> {
    let h: Vec<f64> = reports.iter().map(|r| r.h).collect();
    let slope = |k: usize| {
        let e: Vec<f64> = reports.iter().map(|r| r.norms()[k]).collect();
        fit_order(&h, &e)
    };
    Ok(Orders {
        l1: slope(0)?,
        linf: slope(1)?,
        grad_l1: slope(2)?,
        grad_linf: slope(3)?,
    })
}

/// Quartiles by linear interpolation between order statistics; whiskers at
/// the extremes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxStats {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl BoxStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
        };
        Some(BoxStats {
            count: v.len(),
            min: v[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: v[v.len() - 1],
        })
    }
}

/// One line of the per-ghost report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GhostRecord {
    pub unknown: usize,
    pub i: usize,
    pub j: usize,
    pub layer: u8,
    pub size: usize,
    pub diameter: f64,
    pub chi: f64,
    pub ratio: f64,
    pub collar_mode: CollarMode,
    pub collar_x: f64,
    pub collar_y: f64,
    pub swaps: usize,
    pub aperture_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StencilDiagnostics {
    pub records: Vec<GhostRecord>,
    pub size_histogram: BTreeMap<usize, usize>,
    pub diameter: Option<BoxStats>,
    pub log10_chi: Option<BoxStats>,
    /// Over ghosts with `R_k > 0`.
    pub log10_ratio: Option<BoxStats>,
    pub zero_ratio_count: usize,
    pub axis_projected_count: usize,
}

pub fn stencil_diagnostics(
    stencils: &[Stencil],
    rows: &[BoundaryOperatorRow],
    classification: &Classification,
) -> StencilDiagnostics {
    let records: Vec<GhostRecord> = stencils
        .iter()
        .zip(rows)
        .map(|(s, r)| GhostRecord {
            unknown: r.row,
            i: s.ghost.i,
            j: s.ghost.j,
            layer: classification.ghost_layer(s.ghost).unwrap_or(0),
            size: s.len(),
            diameter: stencil_diameter(&s.members),
            chi: r.chi,
            ratio: r.ratio,
            collar_mode: s.collar.mode,
            collar_x: s.collar.point.x,
            collar_y: s.collar.point.y,
            swaps: s.swaps,
            aperture_deg: s.aperture_deg,
        })
        .collect();
    let mut size_histogram = BTreeMap::new();
    for r in &records {
        *size_histogram.entry(r.size).or_insert(0) += 1;
    }
    let diameters: Vec<f64> = records.iter().map(|r| r.diameter).collect();
    let chis: Vec<f64> = records.iter().map(|r| r.chi.log10()).collect();
    let ratios: Vec<f64> = records
        .iter()
        .filter(|r| r.ratio > 0.0)
        .map(|r| r.ratio.log10())
        .collect();
    StencilDiagnostics {
        size_histogram,
        diameter: BoxStats::from_values(&diameters),
        log10_chi: BoxStats::from_values(&chis),
        log10_ratio: BoxStats::from_values(&ratios),
        zero_ratio_count: records.iter().filter(|r| r.ratio == 0.0).count(),
        axis_projected_count: records
            .iter()
            .filter(|r| r.collar_mode == CollarMode::AxisProjected)
            .count(),
        records,
    }
}
