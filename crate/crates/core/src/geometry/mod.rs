//! Cartesian grid, level-set fields, node classification and boundary projection.

mod classify;
mod grid;
mod level_set;
mod projection;

pub use classify::{
    classify_nodes, classify_nodes_with, BoundaryNodePolicy, Classification, NodeKind,
    ON_BOUNDARY_TOL,
};
pub use grid::{Grid, Node, Point};
pub use level_set::{Annulus, Circle, Flower, Hourglass, Leaf, LevelSet, Square};
pub use projection::{
    axis_projection, project_to_boundary, CollarMode, CollarPoint, AXIS_SEARCH_SPACINGS,
    MAX_PROJECTION_ITERATIONS, PROJECTION_TOL,
};
