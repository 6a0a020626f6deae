use serde::{Deserialize, Serialize};

use super::grid::{Grid, Node};
use super::level_set::LevelSet;
use crate::error::{Error, Result};

/// Nodes with `|phi|` at or below this are treated as lying on the boundary.
pub const ON_BOUNDARY_TOL: f64 = 1e-14;

/// Axis offsets used by the fourth-order interior cross.
pub(crate) const CROSS: [(i64, i64); 8] = [
    (-2, 0),
    (-1, 0),
    (1, 0),
    (2, 0),
    (0, -2),
    (0, -1),
    (0, 1),
    (0, 2),
];

/// What to do with lattice nodes that sit on the boundary (`|phi| <= ON_BOUNDARY_TOL`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryNodePolicy {
    /// Fail with `NodeOnBoundary`.
    #[default]
    Reject,
    /// Treat them as outside the (open) domain; they become ghosts whose
    /// collar point is the node itself.
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    Inactive,
    Interior,
    Ghost { layer: u8 },
}

/// Partition of the lattice into interior nodes, ghost nodes and the rest.
///
/// Unknowns are numbered interior-first: `0..N_I` are interior nodes,
/// `N_I..N_I + N_G` ghosts, each block in lattice order.
#[derive(Debug, Clone)]
pub struct Classification {
    grid: Grid,
    kinds: Vec<NodeKind>,
    unknown_of: Vec<Option<usize>>,
    nodes: Vec<Node>,
    interior_count: usize,
}

/// Classifies every lattice node against the level set.
///
/// Ghosts are exactly the exterior nodes reached by some interior node's
/// width-5 cross, which yields at most two layers and guarantees that every
/// interior row only references active nodes.
pub fn classify_nodes(grid: &Grid, level_set: &dyn LevelSet) -> Result<Classification> {
    classify_nodes_with(grid, level_set, BoundaryNodePolicy::Reject)
}

/// [`classify_nodes`] with an explicit treatment of nodes lying on the boundary.
pub fn classify_nodes_with(
    grid: &Grid,
    level_set: &dyn LevelSet,
    policy: BoundaryNodePolicy,
) -> Result<Classification> {
    let total = grid.node_count();
    let mut kinds = vec![NodeKind::Inactive; total];

    for (k, kind) in kinds.iter_mut().enumerate() {
        let node = grid.node_at(k);
        let value = level_set.value(grid.point(node));
        if !(value.abs() > ON_BOUNDARY_TOL) {
            if policy == BoundaryNodePolicy::Exterior && value.is_finite() {
                continue;
            }
            return Err(Error::NodeOnBoundary {
                i: node.i,
                j: node.j,
                value,
            });
        }
        if value < 0.0 {
            *kind = NodeKind::Interior;
        }
    }

    let interior: Vec<Node> = (0..total)
        .filter(|&k| kinds[k] == NodeKind::Interior)
        .map(|k| grid.node_at(k))
        .collect();
    if interior.is_empty() {
        return Err(Error::EmptyInterior);
    }

    for node in &interior {
        for &(di, dj) in &CROSS {
            let neighbour = grid
                .offset(*node, di, dj)
                .ok_or(Error::MissingNeighbor { i: node.i, j: node.j })?;
            let slot = &mut kinds[grid.linear(neighbour)];
            let layer = (di.abs() + dj.abs()) as u8;
            match slot {
                NodeKind::Interior => {}
                NodeKind::Inactive => *slot = NodeKind::Ghost { layer },
                NodeKind::Ghost { layer: current } => *current = (*current).min(layer),
            }
        }
    }

    let mut unknown_of = vec![None; total];
    let mut nodes = interior;
    let interior_count = nodes.len();
    nodes.extend(
        (0..total)
            .filter(|&k| matches!(kinds[k], NodeKind::Ghost { .. }))
            .map(|k| grid.node_at(k)),
    );
    for (u, node) in nodes.iter().enumerate() {
        unknown_of[grid.linear(*node)] = Some(u);
    }

    Ok(Classification {
        grid: *grid,
        kinds,
        unknown_of,
        nodes,
        interior_count,
    })
}

impl Classification {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kind(&self, node: Node) -> NodeKind {
        self.kinds[self.grid.linear(node)]
    }

    /// Unknown index of an active node.
    pub fn unknown(&self, node: Node) -> Option<usize> {
        self.unknown_of[self.grid.linear(node)]
    }

    pub fn node(&self, unknown: usize) -> Node {
        self.nodes[unknown]
    }

    pub fn is_active(&self, node: Node) -> bool {
        self.kind(node) != NodeKind::Inactive
    }

    pub fn is_ghost(&self, node: Node) -> bool {
        matches!(self.kind(node), NodeKind::Ghost { .. })
    }

    pub fn is_interior(&self, node: Node) -> bool {
        self.kind(node) == NodeKind::Interior
    }

    pub fn ghost_layer(&self, node: Node) -> Option<u8> {
        match self.kind(node) {
            NodeKind::Ghost { layer } => Some(layer),
            _ => None,
        }
    }

    pub fn interior_count(&self) -> usize {
        self.interior_count
    }

    pub fn ghost_count(&self) -> usize {
        self.nodes.len() - self.interior_count
    }

    pub fn active_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn interior(&self) -> &[Node] {
        &self.nodes[..self.interior_count]
    }

    pub fn ghosts(&self) -> &[Node] {
        &self.nodes[self.interior_count..]
    }

    /// All active nodes in unknown order.
    pub fn active(&self) -> &[Node] {
        &self.nodes
    }
}
