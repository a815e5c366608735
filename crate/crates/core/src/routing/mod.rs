//! Grid-graph routing: batched Bellman-Ford shortest paths, exact open-route
//! optimization over a segmented permutation space, and the
//! cluster-decomposed approximate router.

mod graph;
mod permutation;
mod routes;

pub use graph::{bellman_ford, build_grid_graph, pairwise_distances, EdgeListGraph, ShortestPaths, UNREACHABLE};
pub use permutation::{
    factorial_big, half_route_count, plan_segmentation, route_count_reduction,
    unrank_open_route, unrank_permutation, SegmentationPlan, DEFAULT_SEGMENT_CAPACITY,
};
pub use routes::{
    clustered_route, exact_open_route, held_karp_open_route, DistanceMatrix, RouteMethod,
    RoutePlan, DEFAULT_EXHAUSTIVE_LIMIT,
};
