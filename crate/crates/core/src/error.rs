use crate::grid::Coord;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Inconsistent or out-of-range configuration values.
    #[error("configuration error: {0}")]
    Config(String),

    /// An article id that is not currently placed in the warehouse.
    #[error("article {0} is not placed in the warehouse")]
    ArticleNotFound(u32),

    /// Malformed or version-mismatched snapshot / text stream.
    #[error("decode error: {0}")]
    Decode(String),

    /// A coordinate outside the configured grid.
    #[error("coordinate ({},{},{}) is outside the grid", .0.i, .0.j, .0.k)]
    OutOfGrid(Coord),

    /// Bellman-Ford relaxed an edge after V-1 rounds.
    #[error("negative cycle reachable from source {source_vertex} (vertex {vertex} still improves)")]
    NegativeCycle { source_vertex: u32, vertex: u32 },

    /// A stop pair with no connecting path.
    #[error("stops {0} and {1} are disconnected")]
    DisconnectedStops(usize, usize),

    /// Instance too large for the exhaustive route solver.
    #[error("{n} stops exceed the exhaustive limit {limit}; use the clustered route instead")]
    TooManyStops { n: usize, limit: usize },

    /// Invalid input to a statistics estimator.
    #[error("statistics error: {0}")]
    Stats(String),

    /// Invalid input to a clustering operation.
    #[error("clustering error: {0}")]
    Clustering(String),

    /// Replay detected an output that differs from the manifest.
    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
