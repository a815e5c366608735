//! The 3-D node grid: dimensions, coordinates and index flattening.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node counts per axis. Every axis has at least one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridDims {
    pub n_x: u32,
    pub n_y: u32,
    pub n_z: u32,
}

/// A 1-based shelf coordinate. A rack is the set of nodes sharing `(i, j)`.
///
/// The derived ordering is lexicographic on `(i, j, k)`, which is the
/// canonical enumeration order everywhere in this crate.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct Coord {
    pub i: u32,
    pub j: u32,
    pub k: u32,
}

impl std::fmt::Display for Coord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.i, self.j, self.k)
    }
}

impl Coord {
    pub fn new(i: u32, j: u32, k: u32) -> Self {
        Self { i, j, k }
    }

    /// The rack position this node stops at.
    pub fn stop(&self) -> (u32, u32) {
        (self.i, self.j)
    }
}

impl GridDims {
    pub fn new(n_x: u32, n_y: u32, n_z: u32) -> Result<Self> {
        if n_x == 0 || n_y == 0 || n_z == 0 {
            return Err(Error::Config(format!(
                "grid dimensions must all be >= 1, got {n_x}x{n_y}x{n_z}"
            )));
        }
        let total = n_x as u64 * n_y as u64 * n_z as u64;
        if total > u32::MAX as u64 || total > usize::MAX as u64 {
            return Err(Error::Config(format!(
                "grid of {total} nodes exceeds the supported index range"
            )));
        }
        Ok(Self { n_x, n_y, n_z })
    }

    /// Total number of shelf nodes.
    pub fn node_count(&self) -> usize {
        self.n_x as usize * self.n_y as usize * self.n_z as usize
    }

    /// Number of rack positions in the `(i, j)` plane.
    pub fn rack_count(&self) -> usize {
        self.n_x as usize * self.n_y as usize
    }

    pub fn contains(&self, c: Coord) -> bool {
        (1..=self.n_x).contains(&c.i) && (1..=self.n_y).contains(&c.j) && (1..=self.n_z).contains(&c.k)
    }

    /// Flatten a coordinate so that ascending indexes enumerate coordinates
    /// in lexicographic `(i, j, k)` order.
    pub fn node_index(&self, c: Coord) -> usize {
        debug_assert!(self.contains(c));
        ((c.i - 1) as usize * self.n_y as usize + (c.j - 1) as usize) * self.n_z as usize
            + (c.k - 1) as usize
    }

    pub fn coord_at(&self, index: usize) -> Coord {
        debug_assert!(index < self.node_count());
        let k = (index % self.n_z as usize) as u32 + 1;
        let rest = index / self.n_z as usize;
        let j = (rest % self.n_y as usize) as u32 + 1;
        let i = (rest / self.n_y as usize) as u32 + 1;
        Coord { i, j, k }
    }

    /// Flatten a stop `(i, j)` onto the routing plane: `(j-1)*n_x + (i-1)`,
    /// so stop 0 is `(1, 1)` and indexes grow along the x axis first.
    pub fn stop_vertex(&self, i: u32, j: u32) -> u32 {
        debug_assert!((1..=self.n_x).contains(&i) && (1..=self.n_y).contains(&j));
        (j - 1) * self.n_x + (i - 1)
    }

    pub fn stop_of_vertex(&self, v: u32) -> (u32, u32) {
        debug_assert!((v as usize) < self.rack_count());
        (v % self.n_x + 1, v / self.n_x + 1)
    }
}
