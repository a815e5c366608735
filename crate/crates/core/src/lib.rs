//! Warehouse storage-and-retrieval optimization engine.
//!
//! The simulator models a warehouse as a 3-D grid of shelf nodes holding
//! article parcels. Picking orders are filled against the grid; nodes that
//! run dry trigger a restocking move toward the cluster center of the
//! purchase orders that consume them. Iterating pick-and-restock drives the
//! storage layout toward compact, well-separated picking regions, which this
//! crate measures (silhouette scores, cluster-center geometry) and exploits
//! for routing (exact open-route search plus a cluster-decomposed
//! approximation over a data-parallel Bellman-Ford core).
//!
//! Modules:
//! - [`grid`] / [`state`]: the node grid and the warehouse state (placement
//!   array + balance array) with snapshot serialization.
//! - [`orders`]: picking orders, purchase orders, and seeded order streams
//!   with the recurring / fixed-slot / random-slot perturbation models.
//! - [`clustering`]: K-means over purchase orders, per-cluster pick sets,
//!   centers, covariances, silhouette scoring, center-triangle geometry.
//! - [`wms`]: the pick/update/check/move loop and trajectory recording.
//! - [`routing`]: grid graphs, batched Bellman-Ford, exact and
//!   cluster-decomposed open-route optimization, permutation segmentation.
//! - [`stats`]: t-based confidence intervals, permutation tests, effect
//!   sizes, trajectory averaging.
//! - [`harness`]: experiment orchestration, CSV/manifest emission, replay.

pub mod clustering;
pub mod error;
pub mod grid;
pub mod harness;
pub mod orders;
pub mod routing;
pub mod state;
pub mod stats;
pub mod util;
pub mod wms;

pub use error::{Error, Result};
pub use grid::{Coord, GridDims};
pub use state::{StateConfig, WarehouseState};
