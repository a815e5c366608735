//! Open-route optimization over a stop distance matrix: exhaustive search,
//! Held-Karp dynamic programming, and the cluster-decomposed stitcher.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridDims;
use crate::routing::graph::{build_grid_graph, pairwise_distances, UNREACHABLE};
use crate::routing::permutation::{
    factorial_u64, half_route_count, plan_segmentation, unrank_open_route, unrank_permutation,
    DEFAULT_SEGMENT_CAPACITY,
};

/// Largest stop count the exhaustive solver accepts by default. 10 stops
/// mean 10!/2 = 1 814 400 route evaluations, one default batch.
pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 10;

/// Exact shortest-path lengths between the stops of one route instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    /// Rack positions `(i, j)` of the stops.
    pub stops: Vec<(u32, u32)>,
    /// Row-major n x n shortest-path lengths.
    d: Vec<i64>,
}

impl DistanceMatrix {
    /// Build from explicit rows (for tests and synthetic instances).
    pub fn from_rows(stops: Vec<(u32, u32)>, rows: Vec<Vec<i64>>) -> Result<Self> {
        let n = stops.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Config("distance matrix shape mismatch".into()));
        }
        let mut d = Vec::with_capacity(n * n);
        for row in rows {
            d.extend(row);
        }
        Ok(Self { stops, d })
    }

    /// Multi-source Bellman-Ford over the unit grid graph of `dims`.
    pub fn from_grid(dims: GridDims, stops: &[(u32, u32)]) -> Result<Self> {
        let graph = build_grid_graph(dims);
        let vertices: Vec<u32> = stops.iter().map(|&(i, j)| dims.stop_vertex(i, j)).collect();
        let rows = pairwise_distances(&graph, &vertices)?;
        Self::from_rows(stops.to_vec(), rows)
    }

    pub fn len(&self) -> usize {
        self.stops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stops.is_empty()
    }

    pub fn get(&self, a: usize, b: usize) -> i64 {
        self.d[a * self.stops.len() + b]
    }

    /// First unreachable stop pair, if any.
    fn disconnected_pair(&self) -> Option<(usize, usize)> {
        let n = self.len();
        for a in 0..n {
            for b in 0..n {
                if a != b && self.get(a, b) >= UNREACHABLE {
                    return Some((a, b));
                }
            }
        }
        None
    }

    fn route_length(&self, order: &[usize]) -> i64 {
        order
            .windows(2)
            .map(|w| self.get(w[0], w[1]))
            .fold(0i64, i64::saturating_add)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RouteMethod {
    Exact,
    HeldKarp,
    Clustered,
}

/// An open (non-closed) stop ordering with its total length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutePlan {
    /// Visit order as indexes into the instance's stop list.
    pub order: Vec<usize>,
    pub total_length: i64,
    pub method: RouteMethod,
}

impl RoutePlan {
    /// CSV rows `position,stop,i,j` followed by a `total,<length>` line.
    pub fn to_csv(&self, dm: &DistanceMatrix) -> String {
        let mut out = String::from("position,stop,i,j\n");
        for (pos, &s) in self.order.iter().enumerate() {
            let (i, j) = dm.stops[s];
            out.push_str(&format!("{pos},{s},{i},{j}\n"));
        }
        out.push_str(&format!("total,{},,\n", self.total_length));
        out
    }
}

/// Minimal-length undirected open route by exhaustive evaluation of the
/// `n!/2` endpoint-ordered permutations, segmented into batches evaluated
/// in parallel. Ties resolve to the lexicographically smallest
/// representative. `capacity` defaults to [`DEFAULT_SEGMENT_CAPACITY`].
pub fn exact_open_route(
    dm: &DistanceMatrix,
    limit: usize,
    capacity: Option<u64>,
) -> Result<RoutePlan> {
    let n = dm.len();
    if n == 0 {
        return Err(Error::Config("route over an empty stop set".into()));
    }
    if n > limit {
        return Err(Error::TooManyStops { n, limit });
    }
    if n == 1 {
        return Ok(RoutePlan { order: vec![0], total_length: 0, method: RouteMethod::Exact });
    }
    let space = half_route_count(n)
        .ok_or_else(|| Error::Config(format!("{n} stops overflow the rank space")))?;
    let plan = plan_segmentation(space, capacity.unwrap_or(DEFAULT_SEGMENT_CAPACITY))?;

    let best = plan
        .ranges
        .par_iter()
        .filter_map(|&(start, count)| {
            let mut best: Option<(i64, u64)> = None;
            for rank in start..start + count {
                let perm = unrank_open_route(rank, n);
                let len = dm.route_length(&perm);
                if best.map_or(true, |(bl, _)| len < bl) {
                    best = Some((len, rank));
                }
            }
            best
        })
        .min(); // (length, rank) pairs order by length then rank

    let (len, rank) = best.expect("nonempty rank space");
    if len >= UNREACHABLE {
        let (a, b) = dm.disconnected_pair().unwrap_or((0, 0));
        return Err(Error::DisconnectedStops(a, b));
    }
    Ok(RoutePlan {
        order: unrank_open_route(rank, n),
        total_length: len,
        method: RouteMethod::Exact,
    })
}

/// Exact open-route optimum via Held-Karp subset dynamic programming,
/// `O(n^2 2^n)`. Serves as the oracle for the exhaustive and clustered
/// solvers; practical up to ~20 stops.
pub fn held_karp_open_route(dm: &DistanceMatrix) -> Result<RoutePlan> {
    let n = dm.len();
    if n == 0 {
        return Err(Error::Config("route over an empty stop set".into()));
    }
    if n > 20 {
        return Err(Error::TooManyStops { n, limit: 20 });
    }
    if n == 1 {
        return Ok(RoutePlan { order: vec![0], total_length: 0, method: RouteMethod::HeldKarp });
    }
    let full = (1usize << n) - 1;
    let mut dp = vec![UNREACHABLE; (full + 1) * n];
    let mut parent = vec![usize::MAX; (full + 1) * n];
    for s in 0..n {
        dp[(1 << s) * n + s] = 0;
    }
    for mask in 1..=full {
        for last in 0..n {
            if mask & (1 << last) == 0 {
                continue;
            }
            let cur = dp[mask * n + last];
            if cur >= UNREACHABLE {
                continue;
            }
            for next in 0..n {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let step = dm.get(last, next);
                if step >= UNREACHABLE {
                    continue;
                }
                let cand = cur + step;
                let slot = (mask | (1 << next)) * n + next;
                if cand < dp[slot] {
                    dp[slot] = cand;
                    parent[slot] = last;
                }
            }
        }
    }
    let mut best_last = usize::MAX;
    let mut best_len = UNREACHABLE;
    for last in 0..n {
        let len = dp[full * n + last];
        if len < best_len {
            best_len = len;
            best_last = last;
        }
    }
    if best_last == usize::MAX {
        let (a, b) = dm.disconnected_pair().unwrap_or((0, 0));
        return Err(Error::DisconnectedStops(a, b));
    }
    let mut order = Vec::with_capacity(n);
    let mut mask = full;
    let mut last = best_last;
    loop {
        order.push(last);
        let prev = parent[mask * n + last];
        mask &= !(1 << last);
        if prev == usize::MAX {
            break;
        }
        last = prev;
    }
    order.reverse();
    if order[0] > order[n - 1] {
        order.reverse(); // undirected canonical form: smaller endpoint first
    }
    Ok(RoutePlan { order, total_length: best_len, method: RouteMethod::HeldKarp })
}

/// Cluster-decomposed route: an exact open route inside each cluster, then
/// exhaustive stitching over all `m! * 2^(m-1)` cluster orders and
/// orientations, connecting boundary endpoints through the distance matrix.
pub fn clustered_route(dm: &DistanceMatrix, labels: &[usize], limit: usize) -> Result<RoutePlan> {
    if labels.len() != dm.len() {
        return Err(Error::Config(format!(
            "{} labels for {} stops",
            labels.len(),
            dm.len()
        )));
    }
    if dm.is_empty() {
        return Err(Error::Config("route over an empty stop set".into()));
    }
    let max_label = labels.iter().max().copied().unwrap_or(0);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); max_label + 1];
    for (stop, &l) in labels.iter().enumerate() {
        groups[l].push(stop);
    }
    groups.retain(|g| !g.is_empty());
    let m = groups.len();
    if m > 12 {
        return Err(Error::TooManyStops { n: m, limit: 12 });
    }

    // Exact route within each cluster, on the restricted matrix.
    let mut cluster_paths: Vec<Vec<usize>> = Vec::with_capacity(m);
    let mut intra_total = 0i64;
    for group in &groups {
        let rows: Vec<Vec<i64>> = group
            .iter()
            .map(|&a| group.iter().map(|&b| dm.get(a, b)).collect())
            .collect();
        let stops: Vec<(u32, u32)> = group.iter().map(|&s| dm.stops[s]).collect();
        let sub = DistanceMatrix::from_rows(stops, rows)?;
        let local = exact_open_route(&sub, limit, None)?;
        intra_total = intra_total.saturating_add(local.total_length);
        cluster_paths.push(local.order.iter().map(|&ix| group[ix]).collect());
    }

    if m == 1 {
        return Ok(RoutePlan {
            order: cluster_paths.pop().unwrap(),
            total_length: intra_total,
            method: RouteMethod::Clustered,
        });
    }

    // Stitch: enumerate cluster orders (halved by endpoint-cluster order)
    // and per-cluster traversal orientations.
    let perm_count = factorial_u64(m).expect("m <= 12");
    let mut best: Option<(i64, Vec<usize>, u32)> = None;
    for rank in 0..perm_count {
        let perm = unrank_permutation(rank, m);
        if perm[0] > perm[m - 1] {
            continue; // reversal-equivalent stitchings evaluated once
        }
        for orientation in 0..(1u32 << m) {
            let mut connect = 0i64;
            for leg in 0..m - 1 {
                let prev = &cluster_paths[perm[leg]];
                let next = &cluster_paths[perm[leg + 1]];
                let exit = if orientation & (1 << leg) == 0 {
                    *prev.last().unwrap()
                } else {
                    prev[0]
                };
                let entry = if orientation & (1 << (leg + 1)) == 0 {
                    next[0]
                } else {
                    *next.last().unwrap()
                };
                connect = connect.saturating_add(dm.get(exit, entry));
            }
            if best
                .as_ref()
                .map_or(true, |(bl, _, _)| connect < *bl)
            {
                best = Some((connect, perm.clone(), orientation));
            }
        }
    }

    let (connect, perm, orientation) = best.expect("m >= 2 leaves stitchings");
    let total = intra_total.saturating_add(connect);
    if total >= UNREACHABLE {
        let (a, b) = dm.disconnected_pair().unwrap_or((0, 0));
        return Err(Error::DisconnectedStops(a, b));
    }
    let mut order = Vec::with_capacity(dm.len());
    for (leg, &cluster) in perm.iter().enumerate() {
        let path = &cluster_paths[cluster];
        if orientation & (1 << leg) == 0 {
            order.extend(path.iter().copied());
        } else {
            order.extend(path.iter().rev().copied());
        }
    }
    Ok(RoutePlan { order, total_length: total, method: RouteMethod::Clustered })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid_instance(stops: &[(u32, u32)]) -> DistanceMatrix {
        let dims = GridDims { n_x: 10, n_y: 10, n_z: 1 };
        DistanceMatrix::from_grid(dims, stops).unwrap()
    }

    #[test]
    fn collinear_stops_route_length() {
        let dm = grid_instance(&[(1, 1), (1, 2), (1, 3)]);
        let plan = exact_open_route(&dm, 10, None).unwrap();
        assert_eq!(plan.total_length, 2);
        assert_eq!(plan.order, vec![0, 1, 2]);
    }

    #[test]
    fn single_stop_has_zero_length() {
        let dm = grid_instance(&[(4, 4)]);
        let plan = exact_open_route(&dm, 10, None).unwrap();
        assert_eq!(plan.total_length, 0);
        assert_eq!(plan.order, vec![0]);
        let hk = held_karp_open_route(&dm).unwrap();
        assert_eq!(hk.total_length, 0);
    }

    #[test]
    fn two_stop_route_is_their_distance() {
        let dm = grid_instance(&[(1, 1), (5, 4)]);
        assert_eq!(exact_open_route(&dm, 10, None).unwrap().total_length, 7);
        assert_eq!(held_karp_open_route(&dm).unwrap().total_length, 7);
    }

    #[test]
    fn refuses_oversized_instances() {
        let stops: Vec<(u32, u32)> = (1..=6).map(|i| (i, 1)).collect();
        let dm = grid_instance(&stops);
        match exact_open_route(&dm, 5, None) {
            Err(Error::TooManyStops { n: 6, limit: 5 }) => {}
            other => panic!("expected stop-limit refusal, got {other:?}"),
        }
    }

    fn random_stops(rng: &mut ChaCha8Rng, n: usize) -> Vec<(u32, u32)> {
        let mut stops = Vec::new();
        while stops.len() < n {
            let s = (rng.gen_range(1..=10), rng.gen_range(1..=10));
            if !stops.contains(&s) {
                stops.push(s);
            }
        }
        stops
    }

    #[test]
    fn exhaustive_matches_held_karp_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(88);
        for round in 0..40 {
            let n = 2 + (round % 8);
            let dm = grid_instance(&random_stops(&mut rng, n));
            let exact = exact_open_route(&dm, 10, None).unwrap();
            let hk = held_karp_open_route(&dm).unwrap();
            assert_eq!(exact.total_length, hk.total_length, "instance {round}");
            assert_eq!(dm.route_length(&exact.order), exact.total_length);
            assert_eq!(dm.route_length(&hk.order), hk.total_length);
        }
    }

    #[test]
    fn segmented_evaluation_matches_unsegmented() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let dm = grid_instance(&random_stops(&mut rng, 7));
            let whole = exact_open_route(&dm, 10, Some(u64::MAX)).unwrap();
            let segmented = exact_open_route(&dm, 10, Some(97)).unwrap();
            assert_eq!(whole.total_length, segmented.total_length);
            assert_eq!(whole.order, segmented.order);
        }
    }

    #[test]
    fn reversal_leaves_length_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let dm = grid_instance(&random_stops(&mut rng, 6));
        let plan = exact_open_route(&dm, 10, None).unwrap();
        let mut reversed = plan.order.clone();
        reversed.reverse();
        assert_eq!(dm.route_length(&reversed), plan.total_length);
    }

    #[test]
    fn clustered_single_cluster_equals_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dm = grid_instance(&random_stops(&mut rng, 6));
        let exact = exact_open_route(&dm, 10, None).unwrap();
        let clustered = clustered_route(&dm, &[0; 6], 10).unwrap();
        assert_eq!(clustered.total_length, exact.total_length);
    }

    #[test]
    fn clustered_never_beats_exact_and_singletons_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for round in 0..25 {
            let n = 4 + (round % 4);
            let dm = grid_instance(&random_stops(&mut rng, n));
            let exact = exact_open_route(&dm, 10, None).unwrap();
            let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
            let clustered = clustered_route(&dm, &labels, 10).unwrap();
            assert!(clustered.total_length >= exact.total_length);
            assert_eq!(dm.route_length(&clustered.order), clustered.total_length);
            // Every stop in its own cluster: stitching spans all routes.
            let singleton_labels: Vec<usize> = (0..n).collect();
            let singles = clustered_route(&dm, &singleton_labels, 10).unwrap();
            assert_eq!(singles.total_length, exact.total_length);
        }
    }

    #[test]
    fn clustered_route_visits_every_stop_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dm = grid_instance(&random_stops(&mut rng, 8));
        let labels = [0, 0, 1, 1, 2, 2, 0, 1];
        let plan = clustered_route(&dm, &labels, 10).unwrap();
        let mut seen = plan.order.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn disconnected_stops_error_at_route_time() {
        let dm = DistanceMatrix::from_rows(
            vec![(1, 1), (2, 2)],
            vec![vec![0, UNREACHABLE], vec![UNREACHABLE, 0]],
        )
        .unwrap();
        assert!(matches!(
            exact_open_route(&dm, 10, None),
            Err(Error::DisconnectedStops(0, 1))
        ));
        assert!(matches!(
            held_karp_open_route(&dm),
            Err(Error::DisconnectedStops(0, 1))
        ));
    }

    #[test]
    fn route_csv_lists_stops_and_total() {
        let dm = grid_instance(&[(1, 1), (1, 3)]);
        let plan = exact_open_route(&dm, 10, None).unwrap();
        let csv = plan.to_csv(&dm);
        assert!(csv.starts_with("position,stop,i,j\n0,0,1,1\n1,1,1,3\n"));
        assert!(csv.ends_with("total,2,,\n"));
    }
}
