//! Stencil construction for ghost nodes.
//!
//! Triangle stencils (S1, S2, S3) are fixed lattice shapes oriented by the
//! collar point. Cone stencils (S4.1, S4.2, S4.3) are grown greedily from the
//! active nodes inside a cone pointing from the ghost towards its collar
//! point, steered by the local and global conditioning measures.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::basis::basis_size;
use crate::boundary_ops::{ConditioningOracle, StencilQuality};
use crate::error::{Error, Result};
use crate::geometry::{
    axis_projection, project_to_boundary, Classification, CollarPoint, Grid, LevelSet, Node,
};

/// Hard upper bound on cone stencil size.
pub const MAX_STENCIL_SIZE: usize = 25;
/// Aperture increment applied when a cone runs out of usable candidates.
pub const APERTURE_STEP_DEG: f64 = 15.0;
/// Largest inward shift tried by S3.
const MAX_S3_SHIFT: i64 = 4;
/// Slack on the angular predicate so lattice points on the cone edge are kept.
const CONE_EDGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    S1,
    S2,
    S3,
    #[serde(rename = "S4.1")]
    S4_1,
    #[serde(rename = "S4.2")]
    S4_2,
    #[serde(rename = "S4.3")]
    S4_3,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::S1,
        StrategyKind::S2,
        StrategyKind::S3,
        StrategyKind::S4_1,
        StrategyKind::S4_2,
        StrategyKind::S4_3,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StrategyKind::S1 => "S1",
            StrategyKind::S2 => "S2",
            StrategyKind::S3 => "S3",
            StrategyKind::S4_1 => "S4.1",
            StrategyKind::S4_2 => "S4.2",
            StrategyKind::S4_3 => "S4.3",
        }
    }

    pub fn is_cone(&self) -> bool {
        matches!(self, StrategyKind::S4_1 | StrategyKind::S4_2 | StrategyKind::S4_3)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('_', ".");
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown stencil strategy {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StencilStrategy {
    pub kind: StrategyKind,
    /// Leg length `p` of the triangle stencils.
    pub triangle_size: usize,
    /// Full cone aperture in degrees.
    pub aperture_deg: f64,
    pub lambda_loc: f64,
    pub lambda_glo: f64,
    pub max_swaps: usize,
}

impl Default for StencilStrategy {
    fn default() -> Self {
        StencilStrategy {
            kind: StrategyKind::S4_3,
            triangle_size: 4,
            aperture_deg: 60.0,
            lambda_loc: 1e6,
            lambda_glo: 10.0,
            max_swaps: 3,
        }
    }
}

impl StencilStrategy {
    pub fn new(kind: StrategyKind) -> Self {
        StencilStrategy {
            kind,
            ..Default::default()
        }
    }

    pub fn with_aperture(mut self, degrees: f64) -> Self {
        self.aperture_deg = degrees;
        self
    }

    pub fn validate(&self, order: usize) -> Result<()> {
        let p = self.triangle_size;
        if p < 1 {
            return Err(Error::InvalidParameter("triangle size must be >= 1".into()));
        }
        if !self.kind.is_cone() && (p + 1) * (p + 2) / 2 < basis_size(order) {
            return Err(Error::InvalidParameter(format!(
                "triangle size {p} gives fewer than {} points",
                basis_size(order)
            )));
        }
        if !(self.aperture_deg > 0.0 && self.aperture_deg <= 360.0) {
            return Err(Error::InvalidParameter(format!(
                "cone aperture must lie in (0, 360], got {}",
                self.aperture_deg
            )));
        }
        if !(self.lambda_loc > 0.0 && self.lambda_glo > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Ordered stencil attached to one ghost node.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub ghost: Node,
    /// Members, the ghost itself first.
    pub members: Vec<Node>,
    pub collar: CollarPoint,
    /// Cone aperture finally used (cone strategies only).
    pub aperture_deg: Option<f64>,
    /// Replacement iterations performed by S4.2/S4.3.
    pub swaps: usize,
    /// Conditioning seen during construction (cone strategies; NaN otherwise).
    pub chi: f64,
    pub ratio: f64,
}

impl Stencil {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Maximum pairwise member distance in units of `h`.
pub fn stencil_diameter(members: &[Node]) -> f64 {
    let mut best: i64 = 0;
    for (a, p) in members.iter().enumerate() {
        for q in &members[a + 1..] {
            let di = p.i as i64 - q.i as i64;
            let dj = p.j as i64 - q.j as i64;
            best = best.max(di * di + dj * dj);
        }
    }
    (best as f64).sqrt()
}

/// Collar point of a ghost: the closest boundary point, or the axis
/// projection when the closest-point iteration stalls (non-smooth boundary).
pub fn collar_for(ghost: Node, grid: &Grid, level_set: &dyn LevelSet) -> Result<CollarPoint> {
    let x = grid.point(ghost);
    match project_to_boundary(x, level_set) {
        Ok(c) => Ok(c),
        Err(err @ (Error::ProjectionDiverged { .. } | Error::ZeroGradient { .. })) => {
            axis_projection(x, level_set, grid.spacing()).map_err(|_| err)
        }
        Err(e) => Err(e),
    }
}

fn sign(v: f64) -> i64 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

/// Lattice direction signs of the ghost-to-collar vector.
fn inward_signs(collar: &CollarPoint) -> (i64, i64) {
    let d = collar.direction();
    (sign(d.x), sign(d.y))
}

fn x_dominant(collar: &CollarPoint) -> bool {
    let d = collar.direction();
    d.x.abs() >= d.y.abs()
}

fn place(
    ghost: Node,
    offsets: impl IntoIterator<Item = (i64, i64)>,
    classification: &Classification,
) -> Result<Vec<Node>> {
    let grid = classification.grid();
    let mut members = vec![ghost];
    for (di, dj) in offsets {
        if di == 0 && dj == 0 {
            continue;
        }
        let node = grid
            .offset(ghost, di, dj)
            .filter(|n| classification.is_active(*n))
            .ok_or(Error::InactiveMember {
                i: ghost.i as i64 + di,
                j: ghost.j as i64 + dj,
            })?;
        members.push(node);
    }
    Ok(members)
}

fn triangle_stencil(ghost: Node, collar: &CollarPoint, members: Vec<Node>) -> Stencil {
    Stencil {
        ghost,
        members,
        collar: *collar,
        aperture_deg: None,
        swaps: 0,
        chi: f64::NAN,
        ratio: f64::NAN,
    }
}

/// Right triangle with the right angle at the ghost, legs pointing inward.
pub fn build_s1(
    ghost: Node,
    collar: &CollarPoint,
    p: usize,
    classification: &Classification,
) -> Result<Stencil> {
    let (sx, sy) = inward_signs(collar);
    let p = p as i64;
    let offsets = (0..=p).flat_map(|l| (0..=p - l).map(move |m| (l * sx, m * sy)));
    Ok(triangle_stencil(ghost, collar, place(ghost, offsets, classification)?))
}

/// Offsets `(a, b)` of the inner right triangle in (dominant, other) axes,
/// shifted `shift` columns inward; `shift > 0` drops the first column so the
/// ghost stands alone.
fn inner_triangle(p: i64, shift: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for a in 0..=p {
        if shift > 0 && a == 0 {
            continue;
        }
        for b in 0..=a {
            out.push((a + shift, b));
        }
    }
    out
}

fn orient(
    local: Vec<(i64, i64)>,
    collar: &CollarPoint,
) -> impl Iterator<Item = (i64, i64)> {
    let (sx, sy) = inward_signs(collar);
    let xdom = x_dominant(collar);
    local.into_iter().map(move |(a, b)| {
        if xdom {
            (a * sx, b * sy)
        } else {
            (b * sx, a * sy)
        }
    })
}

/// Right triangle whose right-angle vertex is the node `p` steps inward from
/// the ghost along the dominant axis of the ghost-to-collar vector.
pub fn build_s2(
    ghost: Node,
    collar: &CollarPoint,
    p: usize,
    classification: &Classification,
) -> Result<Stencil> {
    let offsets = orient(inner_triangle(p as i64, 0), collar);
    Ok(triangle_stencil(ghost, collar, place(ghost, offsets, classification)?))
}

/// S2 shifted inward along the dominant axis, one column at a time, until the
/// ghost is its only ghost member.
pub fn build_s3(
    ghost: Node,
    collar: &CollarPoint,
    p: usize,
    classification: &Classification,
) -> Result<Stencil> {
    let mut first_error = None;
    for shift in 0..=MAX_S3_SHIFT {
        let offsets = orient(inner_triangle(p as i64, shift), collar);
        match place(ghost, offsets, classification) {
            Ok(members) => {
                if members[1..].iter().all(|m| !classification.is_ghost(*m)) {
                    return Ok(triangle_stencil(ghost, collar, members));
                }
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    Err(first_error.unwrap_or_else(|| {
        Error::NotAdmissible(format!(
            "no ghost-free S3 shift for ghost ({}, {})",
            ghost.i, ghost.j
        ))
    }))
}

/// Lazily enumerates active nodes inside the cone, nearest first.
#[derive(Clone)]
struct ConeCandidates<'a> {
    classification: &'a Classification,
    ghost: Node,
    axis: Vector2<f64>,
    cos_half: Option<f64>,
    searched: i64,
    limit: i64,
    buffer: VecDeque<Node>,
}

impl<'a> ConeCandidates<'a> {
    fn new(ghost: Node, collar: &CollarPoint, aperture_deg: f64, classification: &'a Classification) -> Self {
        let axis = collar.direction();
        let cos_half = (aperture_deg < 360.0).then(|| (aperture_deg.to_radians() / 2.0).cos());
        ConeCandidates {
            classification,
            ghost,
            axis,
            cos_half,
            searched: 0,
            limit: 2 * classification.grid().nodes_per_side() as i64,
            buffer: VecDeque::new(),
        }
    }

    fn inside(&self, di: i64, dj: i64) -> bool {
        match self.cos_half {
            None => true,
            Some(c) => {
                let v = Vector2::new(di as f64, dj as f64);
                v.dot(&self.axis) / v.norm() >= c - CONE_EDGE_TOL
            }
        }
    }

    /// Adds the next square shell of radius up to twice the current one.
    fn expand(&mut self) -> bool {
        if self.searched >= self.limit {
            return false;
        }
        let inner = self.searched;
        let outer = if inner == 0 { 6 } else { (2 * inner).min(self.limit) };
        let grid = self.classification.grid();
        let mut shell: Vec<(i64, Node)> = Vec::new();
        for dj in -outer..=outer {
            for di in -outer..=outer {
                let r2 = di * di + dj * dj;
                if r2 == 0 || r2 <= inner * inner || r2 > outer * outer {
                    continue;
                }
                let Some(node) = grid.offset(self.ghost, di, dj) else {
                    continue;
                };
                if self.classification.is_active(node) && self.inside(di, dj) {
                    shell.push((r2, node));
                }
            }
        }
        shell.sort_by_key(|&(r2, n)| (r2, n.i, n.j));
        self.buffer.extend(shell.into_iter().map(|(_, n)| n));
        self.searched = outer;
        true
    }
}

impl Iterator for ConeCandidates<'_> {
    type Item = Node;

    fn next(&mut self) -> Option<Node> {
        while self.buffer.is_empty() {
            if !self.expand() {
                return None;
            }
        }
        self.buffer.pop_front()
    }
}

/// Ghost first, then every active node within half the aperture of the
/// ghost-to-collar direction, by increasing distance (ties by `(i, j)`).
pub fn cone_candidates(
    ghost: Node,
    collar: &CollarPoint,
    aperture_deg: f64,
    classification: &Classification,
) -> Vec<Node> {
    std::iter::once(ghost)
        .chain(ConeCandidates::new(ghost, collar, aperture_deg, classification))
        .collect()
}

/// Candidate supply for one cone stencil. When the cone runs dry its aperture
/// grows by [`APERTURE_STEP_DEG`] (up to a full disc) and the scan restarts,
/// skipping nodes already selected or discarded.
#[derive(Clone)]
struct ConeState<'a> {
    ghost: Node,
    collar: CollarPoint,
    classification: &'a Classification,
    aperture: f64,
    cursor: ConeCandidates<'a>,
    members: Vec<Node>,
    removed: Vec<Node>,
}

impl<'a> ConeState<'a> {
    fn new(ghost: Node, collar: CollarPoint, aperture: f64, classification: &'a Classification) -> Self {
        ConeState {
            ghost,
            collar,
            classification,
            aperture,
            cursor: ConeCandidates::new(ghost, &collar, aperture, classification),
            members: vec![ghost],
            removed: Vec::new(),
        }
    }

    fn push_next(&mut self) -> bool {
        loop {
            match self.cursor.next() {
                Some(n) => {
                    if !self.members.contains(&n) && !self.removed.contains(&n) {
                        self.members.push(n);
                        return true;
                    }
                }
                None => {
                    if self.aperture >= 360.0 {
                        return false;
                    }
                    self.aperture = (self.aperture + APERTURE_STEP_DEG).min(360.0);
                    self.cursor =
                        ConeCandidates::new(self.ghost, &self.collar, self.aperture, self.classification);
                }
            }
        }
    }
}

struct ConeBuilder<'a, O: ConditioningOracle + ?Sized> {
    strategy: &'a StencilStrategy,
    oracle: &'a O,
    basis_size: usize,
}

impl<O: ConditioningOracle + ?Sized> ConeBuilder<'_, O> {
    fn evaluate(&self, state: &ConeState) -> StencilQuality {
        self.oracle.evaluate(state.ghost, &state.members, &state.collar)
    }

    /// Appends candidates until the stencil is admissible with
    /// `chi < lambda_loc`. At the size cap an admissible but poorly
    /// conditioned stencil is returned as is; `None` means no admissible
    /// stencil was reached.
    fn grow(&self, state: &mut ConeState) -> Option<StencilQuality> {
        while state.members.len() < self.basis_size {
            if !state.push_next() {
                return None;
            }
        }
        loop {
            let q = self.evaluate(state);
            if q.is_admissible() && q.chi < self.strategy.lambda_loc {
                return Some(q);
            }
            if state.members.len() >= MAX_STENCIL_SIZE || !state.push_next() {
                return q.is_admissible().then_some(q);
            }
        }
    }

    /// Swaps out the ghost member with the largest coefficient for the next
    /// candidate while `R_k >= lambda_glo`. A swap whose regrowth fails is
    /// abandoned and the previous stencil kept.
    fn reduce_ratio(&self, state: &mut ConeState, quality: &mut StencilQuality) -> usize {
        let mut swaps = 0;
        while swaps < self.strategy.max_swaps && quality.ratio >= self.strategy.lambda_glo {
            let Some(coefficients) = quality.coefficients.as_ref() else {
                break;
            };
            let worst = (1..state.members.len())
                .filter(|&l| state.classification.is_ghost(state.members[l]))
                .max_by(|&a, &b| coefficients[a].abs().total_cmp(&coefficients[b].abs()));
            let Some(worst) = worst else {
                break;
            };
            let mut trial = state.clone();
            let dropped = trial.members.remove(worst);
            trial.removed.push(dropped);
            if !trial.push_next() {
                break;
            }
            let Some(trial_quality) = self.grow(&mut trial) else {
                break;
            };
            *state = trial;
            *quality = trial_quality;
            swaps += 1;
        }
        swaps
    }

    fn build(&self, ghost: Node, collar: CollarPoint, classification: &Classification, swapping: bool) -> Result<Stencil> {
        let mut state = ConeState::new(ghost, collar, self.strategy.aperture_deg, classification);
        let mut quality = self.grow(&mut state).ok_or_else(|| {
            Error::NotAdmissible(format!(
                "no admissible cone stencil for ghost ({}, {})",
                ghost.i, ghost.j
            ))
        })?;
        let swaps = if swapping {
            self.reduce_ratio(&mut state, &mut quality)
        } else {
            0
        };
        Ok(Stencil {
            ghost,
            members: state.members,
            collar,
            aperture_deg: Some(state.aperture),
            swaps,
            chi: quality.chi,
            ratio: quality.ratio,
        })
    }
}

/// Cone stencils S4.1, S4.2 and S4.3.
///
/// * S4.1 grows the nearest cone candidates until `chi < lambda_loc`.
/// * S4.2 then, while `R_k >= lambda_glo`, swaps the ghost member with the
///   largest coefficient for the next candidate (at most `max_swaps` times).
/// * S4.3 repeats S4.2 from an axis-projected collar point when `R_k` is
///   still too large.
pub fn build_s4<O: ConditioningOracle + ?Sized>(
    ghost: Node,
    collar: &CollarPoint,
    strategy: &StencilStrategy,
    classification: &Classification,
    oracle: &O,
    level_set: &dyn LevelSet,
) -> Result<Stencil> {
    if !strategy.kind.is_cone() {
        return Err(Error::InvalidParameter(format!(
            "{} is not a cone strategy",
            strategy.kind
        )));
    }
    let builder = ConeBuilder {
        strategy,
        oracle,
        basis_size: oracle.basis_size(),
    };
    let swapping = strategy.kind != StrategyKind::S4_1;
    let stencil = builder.build(ghost, *collar, classification, swapping)?;

    if strategy.kind == StrategyKind::S4_3 && stencil.ratio >= strategy.lambda_glo {
        let grid = classification.grid();
        if let Ok(axis) = axis_projection(grid.point(ghost), level_set, grid.spacing()) {
            return builder.build(ghost, axis, classification, true);
        }
    }
    Ok(stencil)
}

/// Builds the stencil of one ghost under any strategy.
pub fn build_stencil<O: ConditioningOracle + ?Sized>(
    ghost: Node,
    strategy: &StencilStrategy,
    classification: &Classification,
    level_set: &dyn LevelSet,
    oracle: &O,
) -> Result<Stencil> {
    let collar = collar_for(ghost, classification.grid(), level_set)?;
    let p = strategy.triangle_size;
    match strategy.kind {
        StrategyKind::S1 => build_s1(ghost, &collar, p, classification),
        StrategyKind::S2 => build_s2(ghost, &collar, p, classification),
        StrategyKind::S3 => build_s3(ghost, &collar, p, classification),
        _ => build_s4(ghost, &collar, strategy, classification, oracle, level_set),
    }
}
