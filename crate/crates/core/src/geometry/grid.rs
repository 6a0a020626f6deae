use nalgebra::Vector2;
use serde::Serialize;

use crate::error::{Error, Result};

pub type Point = Vector2<f64>;

/// Lattice coordinates of a grid node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Node {
    pub i: usize,
    pub j: usize,
}

impl Node {
    pub const fn new(i: usize, j: usize) -> Self {
        Node { i, j }
    }
}

/// Uniform Cartesian lattice over the box `[-1, 1]²` with `n` cells per side.
///
/// Node `(i, j)` sits at `(-1 + i h, -1 + j h)` with `h = 2 / n`, so there are
/// `n + 1` nodes along each axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    cells: usize,
    h: f64,
}

impl Grid {
    pub fn new(cells_per_side: usize) -> Result<Self> {
        if cells_per_side < 4 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 4 cells per side, got {cells_per_side}"
            )));
        }
        Ok(Grid {
            cells: cells_per_side,
            h: 2.0 / cells_per_side as f64,
        })
    }

    pub fn cells_per_side(&self) -> usize {
        self.cells
    }

    pub fn nodes_per_side(&self) -> usize {
        self.cells + 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_side() * self.nodes_per_side()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Coordinate of lattice line `i`; computed as `-1 + 2i/n` so that
    /// symmetric lines are exact mirrors of each other.
    pub fn coord(&self, i: usize) -> f64 {
        -1.0 + (2 * i) as f64 / self.cells as f64
    }

    pub fn point(&self, node: Node) -> Point {
        Point::new(self.coord(node.i), self.coord(node.j))
    }

    /// Row-major lattice index (`j` outer).
    pub fn linear(&self, node: Node) -> usize {
        node.j * self.nodes_per_side() + node.i
    }

    pub fn node_at(&self, linear: usize) -> Node {
        let n = self.nodes_per_side();
        Node::new(linear % n, linear / n)
    }

    /// Node shifted by a signed lattice offset, or `None` when it leaves the box.
    pub fn offset(&self, node: Node, di: i64, dj: i64) -> Option<Node> {
        let i = node.i as i64 + di;
        let j = node.j as i64 + dj;
        let n = self.nodes_per_side() as i64;
        (0..n)
            .contains(&i)
            .then_some(())
            .filter(|_| (0..n).contains(&j))
            .map(|_| Node::new(i as usize, j as usize))
    }

    /// Nearest lattice node to a point, clamped to the box.
    pub fn nearest(&self, p: Point) -> Node {
        let max = self.cells as f64;
        let to_index = |c: f64| (((c + 1.0) / self.h).round()).clamp(0.0, max) as usize;
        Node::new(to_index(p.x), to_index(p.y))
    }

    /// Diameter of the grid box.
    pub fn box_diameter(&self) -> f64 {
        2.0 * std::f64::consts::SQRT_2
    }
}
