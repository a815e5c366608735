//! Edge-list graphs and the batched Bellman-Ford solver.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridDims;

/// Sentinel distance for unreachable vertices. Kept far below `i64::MAX`
/// so a relaxation can never overflow.
pub const UNREACHABLE: i64 = i64::MAX / 4;

/// A directed graph in edge-list form: parallel arrays of sources,
/// destinations and weights. Grid graphs carry unit weights; the solver
/// itself accepts negative weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeListGraph {
    pub vertex_count: u32,
    pub from: Vec<u32>,
    pub to: Vec<u32>,
    pub weight: Vec<i64>,
}

impl EdgeListGraph {
    pub fn new(vertex_count: u32) -> Self {
        Self { vertex_count, from: Vec::new(), to: Vec::new(), weight: Vec::new() }
    }

    pub fn add_edge(&mut self, from: u32, to: u32, weight: i64) -> Result<()> {
        if from >= self.vertex_count || to >= self.vertex_count {
            return Err(Error::Config(format!(
                "edge {from}->{to} outside the {} vertices",
                self.vertex_count
            )));
        }
        self.from.push(from);
        self.to.push(to);
        self.weight.push(weight);
        Ok(())
    }

    pub fn edge_count(&self) -> usize {
        self.from.len()
    }

    /// Text form: a `V E` header line followed by one `u v w` line per edge.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.vertex_count, self.edge_count());
        for e in 0..self.edge_count() {
            out.push_str(&format!("{} {} {}\n", self.from[e], self.to[e], self.weight[e]));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Decode("empty graph text".into()))?;
        let mut parts = header.split_whitespace();
        let parse = |s: Option<&str>, what: &str| -> Result<u64> {
            s.ok_or_else(|| Error::Decode(format!("missing {what} in graph header")))?
                .parse()
                .map_err(|_| Error::Decode(format!("bad {what} in graph header")))
        };
        let v = parse(parts.next(), "vertex count")?;
        let e = parse(parts.next(), "edge count")?;
        if v > u32::MAX as u64 {
            return Err(Error::Decode("vertex count exceeds u32".into()));
        }
        let mut graph = EdgeListGraph::new(v as u32);
        for (ix, line) in lines.enumerate() {
            let mut f = line.split_whitespace();
            let err = |what: &str| Error::Decode(format!("edge line {}: bad {what}", ix + 1));
            let u: u32 = f.next().ok_or_else(|| err("source"))?.parse().map_err(|_| err("source"))?;
            let w: u32 = f.next().ok_or_else(|| err("destination"))?.parse().map_err(|_| err("destination"))?;
            let wt: i64 = f.next().ok_or_else(|| err("weight"))?.parse().map_err(|_| err("weight"))?;
            graph.add_edge(u, w, wt).map_err(|e| Error::Decode(e.to_string()))?;
        }
        if graph.edge_count() as u64 != e {
            return Err(Error::Decode(format!(
                "header promises {e} edges, found {}",
                graph.edge_count()
            )));
        }
        Ok(graph)
    }
}

/// Unit-weight 4-neighbor grid over the `(i, j)` rack plane. Vertex ids
/// follow `GridDims::stop_vertex`; each neighboring pair carries one
/// directed edge in each direction.
pub fn build_grid_graph(dims: GridDims) -> EdgeListGraph {
    let mut graph = EdgeListGraph::new(dims.rack_count() as u32);
    for j in 1..=dims.n_y {
        for i in 1..=dims.n_x {
            let v = dims.stop_vertex(i, j);
            if i < dims.n_x {
                let right = dims.stop_vertex(i + 1, j);
                graph.add_edge(v, right, 1).unwrap();
                graph.add_edge(right, v, 1).unwrap();
            }
            if j < dims.n_y {
                let up = dims.stop_vertex(i, j + 1);
                graph.add_edge(v, up, 1).unwrap();
                graph.add_edge(up, v, 1).unwrap();
            }
        }
    }
    graph
}

/// Per-source distance and predecessor arrays.
#[derive(Debug, Clone)]
pub struct ShortestPaths {
    pub sources: Vec<u32>,
    /// `dist[s][v]`: shortest length from `sources[s]` to `v`, or
    /// [`UNREACHABLE`].
    pub dist: Vec<Vec<i64>>,
    /// `pred[s][v]`: previous vertex on one shortest path, `None` at the
    /// source and on unreachable vertices.
    pub pred: Vec<Vec<Option<u32>>>,
}

/// Bellman-Ford over all sources in one batch.
///
/// Each source relaxes the full edge list per round (at most V-1 rounds,
/// stopping early once a round makes no update); sources are independent
/// and run data-parallel. A final probe round detects negative cycles and
/// names one still-improving vertex.
pub fn bellman_ford(graph: &EdgeListGraph, sources: &[u32]) -> Result<ShortestPaths> {
    for &s in sources {
        if s >= graph.vertex_count {
            return Err(Error::Config(format!(
                "source {s} outside the {} vertices",
                graph.vertex_count
            )));
        }
    }
    let per_source: Vec<Result<(Vec<i64>, Vec<Option<u32>>)>> = sources
        .par_iter()
        .map(|&s| single_source(graph, s))
        .collect();

    let mut dist = Vec::with_capacity(sources.len());
    let mut pred = Vec::with_capacity(sources.len());
    for r in per_source {
        let (d, p) = r?;
        dist.push(d);
        pred.push(p);
    }
    Ok(ShortestPaths { sources: sources.to_vec(), dist, pred })
}

fn single_source(graph: &EdgeListGraph, source: u32) -> Result<(Vec<i64>, Vec<Option<u32>>)> {
    let v = graph.vertex_count as usize;
    let mut dist = vec![UNREACHABLE; v];
    let mut pred: Vec<Option<u32>> = vec![None; v];
    dist[source as usize] = 0;

    let e = graph.edge_count();
    for _round in 1..v.max(1) {
        let mut changed = false;
        for ix in 0..e {
            let du = dist[graph.from[ix] as usize];
            if du == UNREACHABLE {
                continue;
            }
            let candidate = du + graph.weight[ix];
            let t = graph.to[ix] as usize;
            if candidate < dist[t] {
                dist[t] = candidate;
                pred[t] = Some(graph.from[ix]);
                changed = true;
            }
        }
        if !changed {
            return Ok((dist, pred));
        }
    }
    // One extra pass: any remaining improvement proves a negative cycle.
    for ix in 0..e {
        let du = dist[graph.from[ix] as usize];
        if du != UNREACHABLE && du + graph.weight[ix] < dist[graph.to[ix] as usize] {
            return Err(Error::NegativeCycle { source_vertex: source, vertex: graph.to[ix] });
        }
    }
    Ok((dist, pred))
}

/// Exact pairwise shortest-path lengths between `stops`, one Bellman-Ford
/// batch over all of them. Unreachable pairs keep the [`UNREACHABLE`]
/// sentinel; route construction turns those into errors.
pub fn pairwise_distances(graph: &EdgeListGraph, stops: &[u32]) -> Result<Vec<Vec<i64>>> {
    let paths = bellman_ford(graph, stops)?;
    Ok(stops
        .iter()
        .enumerate()
        .map(|(a, _)| stops.iter().map(|&t| paths.dist[a][t as usize]).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    #[test]
    fn grid_edge_counts() {
        let g = build_grid_graph(GridDims { n_x: 2, n_y: 2, n_z: 1 });
        assert_eq!(g.vertex_count, 4);
        assert_eq!(g.edge_count(), 8);
        let g = build_grid_graph(GridDims { n_x: 10, n_y: 10, n_z: 10 });
        assert_eq!(g.vertex_count, 100);
        assert_eq!(g.edge_count(), 360);
        let g = build_grid_graph(GridDims { n_x: 1, n_y: 1, n_z: 1 });
        assert_eq!(g.vertex_count, 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn grid_edge_count_matches_enumeration() {
        // 2 * 2 * (n_x-1)*n_y + 2 * 2 * ... cross-checked by brute force
        // neighbor enumeration.
        for (nx, ny) in [(3u32, 5u32), (10, 9), (1, 7)] {
            let dims = GridDims { n_x: nx, n_y: ny, n_z: 1 };
            let g = build_grid_graph(dims);
            let mut expected = 0;
            for j in 1..=ny {
                for i in 1..=nx {
                    if i < nx {
                        expected += 2;
                    }
                    if j < ny {
                        expected += 2;
                    }
                }
            }
            assert_eq!(g.edge_count(), expected);
            assert_eq!(expected, 2 * ((nx - 1) * ny + nx * (ny - 1)) as usize);
        }
    }

    #[test]
    fn path_graph_distances() {
        let mut g = EdgeListGraph::new(3);
        g.add_edge(0, 1, 1).unwrap();
        g.add_edge(1, 2, 1).unwrap();
        let sp = bellman_ford(&g, &[0]).unwrap();
        assert_eq!(sp.dist[0], vec![0, 1, 2]);
        assert_eq!(sp.pred[0], vec![None, Some(0), Some(1)]);
    }

    #[test]
    fn grid_distance_is_manhattan() {
        let dims = GridDims { n_x: 10, n_y: 10, n_z: 1 };
        let g = build_grid_graph(dims);
        let sp = bellman_ford(&g, &[dims.stop_vertex(1, 1)]).unwrap();
        assert_eq!(sp.dist[0][dims.stop_vertex(10, 10) as usize], 18);
        assert_eq!(sp.dist[0][dims.stop_vertex(4, 7) as usize], 9);
    }

    #[test]
    fn unreachable_vertices_keep_sentinel() {
        let mut g = EdgeListGraph::new(3);
        g.add_edge(0, 1, 5).unwrap();
        let sp = bellman_ford(&g, &[0]).unwrap();
        assert_eq!(sp.dist[0][2], UNREACHABLE);
        assert_eq!(sp.pred[0][2], None);
    }

    /// Binary-heap Dijkstra oracle for nonnegative weights.
    pub(super) fn dijkstra(graph: &EdgeListGraph, source: u32) -> Vec<i64> {
        let v = graph.vertex_count as usize;
        let mut adj: Vec<Vec<(u32, i64)>> = vec![Vec::new(); v];
        for ix in 0..graph.edge_count() {
            adj[graph.from[ix] as usize].push((graph.to[ix], graph.weight[ix]));
        }
        let mut dist = vec![UNREACHABLE; v];
        dist[source as usize] = 0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0i64, source)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u as usize] {
                continue;
            }
            for &(t, w) in &adj[u as usize] {
                let nd = d + w;
                if nd < dist[t as usize] {
                    dist[t as usize] = nd;
                    heap.push(Reverse((nd, t)));
                }
            }
        }
        dist
    }

    pub(super) fn random_graph(rng: &mut ChaCha8Rng, max_v: usize) -> EdgeListGraph {
        let v = rng.gen_range(2..=max_v);
        let e = rng.gen_range(v..=4 * v);
        let mut g = EdgeListGraph::new(v as u32);
        for _ in 0..e {
            let u = rng.gen_range(0..v) as u32;
            let w = rng.gen_range(0..v) as u32;
            g.add_edge(u, w, rng.gen_range(0..=20)).unwrap();
        }
        g
    }

    #[test]
    fn matches_dijkstra_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        for _ in 0..60 {
            let g = random_graph(&mut rng, 300);
            let source = rng.gen_range(0..g.vertex_count);
            let sp = bellman_ford(&g, &[source]).unwrap();
            assert_eq!(sp.dist[0], dijkstra(&g, source));
        }
    }

    #[test]
    fn detects_planted_negative_cycle() {
        let mut g = EdgeListGraph::new(4);
        g.add_edge(0, 1, 2).unwrap();
        g.add_edge(1, 2, -3).unwrap();
        g.add_edge(2, 1, 2).unwrap();
        g.add_edge(2, 3, 1).unwrap();
        match bellman_ford(&g, &[0]) {
            Err(Error::NegativeCycle { source_vertex: 0, .. }) => {}
            other => panic!("expected negative cycle, got {other:?}"),
        }
    }

    #[test]
    fn negative_edges_without_cycle_are_fine() {
        let mut g = EdgeListGraph::new(3);
        g.add_edge(0, 1, 5).unwrap();
        g.add_edge(1, 2, -4).unwrap();
        g.add_edge(0, 2, 2).unwrap();
        let sp = bellman_ford(&g, &[0]).unwrap();
        assert_eq!(sp.dist[0], vec![0, 5, 1]);
    }

    #[test]
    fn pairwise_matches_per_source_runs() {
        let dims = GridDims { n_x: 6, n_y: 5, n_z: 1 };
        let g = build_grid_graph(dims);
        let stops = vec![0u32, 7, 13, 29, 22];
        let matrix = pairwise_distances(&g, &stops).unwrap();
        for (a, &s) in stops.iter().enumerate() {
            let single = bellman_ford(&g, &[s]).unwrap();
            for (b, &t) in stops.iter().enumerate() {
                assert_eq!(matrix[a][b], single.dist[0][t as usize]);
            }
            assert_eq!(matrix[a][a], 0);
        }
        // Symmetric on the undirected-equivalent grid.
        for a in 0..stops.len() {
            for b in 0..stops.len() {
                assert_eq!(matrix[a][b], matrix[b][a]);
            }
        }
    }

    #[test]
    fn graph_text_round_trip() {
        let g = build_grid_graph(GridDims { n_x: 3, n_y: 2, n_z: 1 });
        let text = g.to_text();
        assert!(text.starts_with("6 14\n"));
        assert_eq!(EdgeListGraph::from_text(&text).unwrap(), g);
        assert!(EdgeListGraph::from_text("").is_err());
        assert!(EdgeListGraph::from_text("2 5\n0 1 1\n").is_err());
        assert!(EdgeListGraph::from_text("2 1\n0 7 1\n").is_err());
    }
}
