//! The picking/restocking loop: pick-map computation, stock updates, stock
//! checks, cluster-guided relocation, and the trajectory iterator.
//!
//! One iteration fills one order against the current state. Nodes whose
//! balance cannot strictly cover their pick are drained and restocked to
//! full capacity: at the empty node nearest the article's cluster center
//! when that strictly shortens the stop distance, in place otherwise. The
//! unmet remainder is picked from the restocked node, and a per-iteration
//! ledger reconciles every parcel moved.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::clustering::{cluster_orders, ClusterModel, Covariance2, PickSets, Point};
use crate::error::{Error, Result};
use crate::grid::Coord;
use crate::orders::{Order, OrderStream};
use crate::routing::{
    clustered_route, held_karp_open_route, DistanceMatrix,
};
use crate::state::{ArticleId, WarehouseState};
use crate::util::fmt_g12;

/// Sparse per-node parcel counts to collect for one order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PickMap {
    /// Node -> parcels, lexicographic iteration order.
    pub w: BTreeMap<Coord, u32>,
}

impl PickMap {
    pub fn total(&self) -> u64 {
        self.w.values().map(|&q| q as u64).sum()
    }

    pub fn stops(&self) -> PickSets {
        PickSets::from_nodes(self.w.keys().copied())
    }
}

/// One executed relocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelocationEvent {
    pub article: ArticleId,
    pub from: Coord,
    pub to: Coord,
    /// Parcels of the triggering order picked from the new node.
    pub shortfall: u32,
    /// Cluster center the move was evaluated against.
    pub center: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockReason {
    /// No empty node strictly closer to the cluster center than the
    /// article's current stop.
    GuardHeld,
    /// The warehouse has no empty node at all.
    NoEmptyNode,
}

/// A relocation trigger that did not move the article; the node is
/// restocked in place instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockedRelocation {
    pub article: ArticleId,
    pub at: Coord,
    /// Unmet parcels at the drain, picked from the node after its in-place
    /// restock.
    pub shortfall: u32,
    pub reason: BlockReason,
}

/// Everything one `process_order` call did to the state.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub pick_map: PickMap,
    pub relocations: Vec<RelocationEvent>,
    pub blocked: Vec<BlockedRelocation>,
    /// Parcels physically removed (old nodes plus shortfalls at new nodes).
    pub parcels_removed: u64,
    /// Parcels added by relocation top-ups.
    pub parcels_added: u64,
    /// Ordered parcels that could not be filled.
    pub unfilled: u64,
}

/// A node drained to zero by a stock update, with the unmet remainder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShortfallNode {
    pub node: Coord,
    pub article: ArticleId,
    pub shortfall: u32,
}

/// Per-node parcel counts for `order`: each ordered article maps its full
/// quantity onto its unique node.
pub fn compute_pick_map(state: &WarehouseState, order: &Order) -> Result<PickMap> {
    let mut map = PickMap::default();
    for (article, qty) in order.quantities() {
        let node = state.locate_article(article)?;
        *map.w.entry(node).or_insert(0) += qty;
    }
    Ok(map)
}

/// Subtract the pick map from the balance array, clamping at zero. Returns
/// the nodes driven to zero (balance <= pick) with their articles and
/// unmet remainders, in lexicographic node order.
pub fn update_stock(state: &mut WarehouseState, pick_map: &PickMap) -> Vec<ShortfallNode> {
    let mut drained = Vec::new();
    for (&node, &requested) in &pick_map.w {
        let before = state.balance_at(node);
        state.pick_parcels(node, requested);
        if before <= requested {
            drained.push(ShortfallNode {
                node,
                article: state.article_at(node),
                shortfall: requested - before,
            });
        }
    }
    drained
}

/// True iff every picked node strictly covers its pick (`balance > pick`),
/// so filling the order would empty no shelf. Unplaced articles count as
/// insufficient.
pub fn check_stock(state: &WarehouseState, order: &Order) -> bool {
    match compute_pick_map(state, order) {
        Ok(map) => map
            .w
            .iter()
            .all(|(&node, &requested)| state.balance_at(node) > requested),
        Err(_) => false,
    }
}

fn stop_distance_sq(stop: (u32, u32), center: Point) -> f64 {
    let dx = stop.0 as f64 - center.0;
    let dy = stop.1 as f64 - center.1;
    dx * dx + dy * dy
}

/// Empty node whose stop is nearest to `center` (Euclidean on `(i, j)`,
/// ties broken lexicographically on `(i, j, k)`).
fn nearest_empty_node(state: &WarehouseState, center: Point) -> Option<Coord> {
    let mut best: Option<(f64, Coord)> = None;
    for node in state.empty_node_iter() {
        let d = stop_distance_sq(node.stop(), center);
        if best.map_or(true, |(bd, bc)| d < bd || (d == bd && node < bc)) {
            best = Some((d, node));
        }
    }
    best.map(|(_, node)| node)
}

struct RelocationLedger {
    relocations: Vec<RelocationEvent>,
    blocked: Vec<BlockedRelocation>,
    removed_at_new: u64,
    added: u64,
    unfilled: u64,
}

/// Restock the articles of drained nodes. Each one moves to the empty node
/// nearest its cluster center when that strictly improves its stop; an
/// article already at its best stop is replenished in place (restocking
/// always happens, only the location is in question). Each move consumes
/// its empty node; the vacated node joins the pool for the moves after it.
fn relocate_drained(
    state: &mut WarehouseState,
    drained: &[ShortfallNode],
    clusters: &ClusterModel,
) -> Result<RelocationLedger> {
    let mut ledger = RelocationLedger {
        relocations: Vec::new(),
        blocked: Vec::new(),
        removed_at_new: 0,
        added: 0,
        unfilled: 0,
    };
    for entry in drained {
        let cluster = *clusters.article_cluster.get(&entry.article).ok_or_else(|| {
            Error::Clustering(format!(
                "article {} is not covered by the cluster model",
                entry.article
            ))
        })?;
        let center = clusters.centers[cluster];

        let target = nearest_empty_node(state, center);
        let improves = target.map_or(false, |t| {
            stop_distance_sq(t.stop(), center) < stop_distance_sq(entry.node.stop(), center)
        });

        let restocked_at = if improves {
            let target = target.unwrap();
            state.relocate_article(entry.article, target)?;
            ledger.added += state.max_balance_of(entry.article) as u64;
            target
        } else {
            ledger.added += state.replenish_node(entry.node)? as u64;
            ledger.blocked.push(BlockedRelocation {
                article: entry.article,
                at: entry.node,
                shortfall: entry.shortfall,
                reason: if target.is_none() {
                    BlockReason::NoEmptyNode
                } else {
                    BlockReason::GuardHeld
                },
            });
            entry.node
        };

        let picked = state.pick_parcels(restocked_at, entry.shortfall);
        if improves && picked > 0 {
            state.record_pick_visit(restocked_at);
        }
        ledger.removed_at_new += picked as u64;
        ledger.unfilled += (entry.shortfall - picked) as u64;
        if improves {
            ledger.relocations.push(RelocationEvent {
                article: entry.article,
                from: entry.node,
                to: restocked_at,
                shortfall: picked,
                center,
            });
        }
    }
    Ok(ledger)
}

/// Standalone stock-check-and-move: drain every node that fails the strict
/// stock check for `order` (picking its residue) and relocate those
/// articles toward their cluster centers. Leaves sufficient nodes alone.
pub fn check_stock_and_move(
    state: &mut WarehouseState,
    order: &Order,
    clusters: &ClusterModel,
) -> Result<(Vec<RelocationEvent>, Vec<BlockedRelocation>)> {
    let pick_map = compute_pick_map(state, order)?;
    let mut drained = Vec::new();
    for (&node, &requested) in &pick_map.w {
        let balance = state.balance_at(node);
        if balance <= requested {
            state.pick_parcels(node, balance);
            drained.push(ShortfallNode {
                node,
                article: state.article_at(node),
                shortfall: requested - balance,
            });
        }
    }
    let ledger = relocate_drained(state, &drained, clusters)?;
    Ok((ledger.relocations, ledger.blocked))
}

/// Fill one order: compute the pick map, update stock everywhere, relocate
/// the drained articles, and bump pick telemetry. The outcome ledger
/// reconciles exactly: `removed + unfilled = order size` and
/// `stock delta = added - removed`.
pub fn process_order(
    state: &mut WarehouseState,
    order: &Order,
    clusters: &ClusterModel,
) -> Result<StepOutcome> {
    let pick_map = compute_pick_map(state, order)?;
    let mut removed_at_old = 0u64;
    for (&node, &requested) in &pick_map.w {
        removed_at_old += requested.min(state.balance_at(node)) as u64;
        state.record_pick_visit(node);
    }
    let drained = update_stock(state, &pick_map);
    let ledger = relocate_drained(state, &drained, clusters)?;
    Ok(StepOutcome {
        pick_map,
        relocations: ledger.relocations,
        blocked: ledger.blocked,
        parcels_removed: removed_at_old + ledger.removed_at_new,
        parcels_added: ledger.added,
        unfilled: ledger.unfilled,
    })
}

/// When to compute route lengths along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RouteSchedule {
    /// Only the first and final iteration.
    FirstAndLast,
    /// Every `n`-th iteration (and the final one).
    EveryN(u32),
}

/// Route evaluation settings for trajectory recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteRecording {
    pub schedule: RouteSchedule,
    /// Stop clusters for the decomposed router.
    pub route_clusters: usize,
    pub exhaustive_limit: usize,
    pub segment_capacity: u64,
    /// K-means seed for stop clustering.
    pub seed: u64,
}

/// Options for [`run_main_loop`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopOptions {
    /// Cluster count for the restocking model.
    pub k: usize,
    pub kmeans_seed: u64,
    /// Recompute the cluster model every iteration (the paper loop).
    /// `false` reuses the model of iteration 1.
    pub recluster_each_step: bool,
    /// Run the structural validator after every iteration.
    pub validate_each_step: bool,
    pub routes: Option<RouteRecording>,
}

impl Default for LoopOptions {
    fn default() -> Self {
        Self {
            k: 3,
            kmeans_seed: 0,
            recluster_each_step: true,
            validate_each_step: false,
            routes: None,
        }
    }
}

/// Everything recorded about iteration `n`: the cluster statistics are for
/// the pre-pick state and the iteration's order, the digest is of the
/// post-pick state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub iteration: u32,
    pub cluster_sizes: Vec<usize>,
    pub centers: Vec<Point>,
    pub covariances: Vec<Covariance2>,
    /// NaN when fewer than two clusters are nonempty.
    pub silhouette: f64,
    /// Shoelace area of the centers; `None` unless k = 3.
    pub triangle_area: Option<f64>,
    pub relocations: Vec<RelocationEvent>,
    pub blocked: Vec<BlockedRelocation>,
    pub order_size: u64,
    pub parcels_removed: u64,
    pub parcels_added: u64,
    pub unfilled: u64,
    pub stop_count: usize,
    pub post_state_digest: u64,
    pub route_len_exact: Option<i64>,
    pub route_len_clustered: Option<i64>,
}

/// One run of the picking/restocking loop.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
}

impl Trajectory {
    pub fn silhouettes(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.silhouette).collect()
    }

    pub fn areas(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.triangle_area.unwrap_or(f64::NAN))
            .collect()
    }

    /// One row per iteration:
    /// `n,silhouette,area,relocations,route_len_exact,route_len_approx`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,silhouette,area,relocations,route_len_exact,route_len_approx\n");
        for r in &self.records {
            let area = r.triangle_area.map(fmt_g12).unwrap_or_default();
            let exact = r.route_len_exact.map(|v| v.to_string()).unwrap_or_default();
            let approx = r.route_len_clustered.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.iteration,
                fmt_g12(r.silhouette),
                area,
                r.relocations.len(),
                exact,
                approx,
            ));
        }
        out
    }

    /// Full event ledger, one JSON object per iteration.
    pub fn events_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let line = serde_json::json!({
                "iteration": r.iteration,
                "relocations": r.relocations,
                "blocked": r.blocked,
                "order_size": r.order_size,
                "removed": r.parcels_removed,
                "added": r.parcels_added,
                "unfilled": r.unfilled,
                "post_state_digest": format!("{:016x}", r.post_state_digest),
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}

fn route_due(schedule: RouteSchedule, n: u32, iterations: u32) -> bool {
    match schedule {
        RouteSchedule::FirstAndLast => n == 1 || n == iterations,
        RouteSchedule::EveryN(step) => n == iterations || (step > 0 && n % step == 0),
    }
}

/// Iterate the pick/restock map over `iterations` orders from `stream`,
/// recording cluster statistics (computed on the pre-pick state and the
/// incoming order), silhouette, center geometry, relocation events and the
/// conservation ledger for every step.
pub fn run_main_loop(
    state: &mut WarehouseState,
    stream: &mut OrderStream,
    iterations: u32,
    options: &LoopOptions,
) -> Result<Trajectory> {
    if iterations == 0 {
        return Err(Error::Config("iterations must be >= 1".into()));
    }
    let mut trajectory = Trajectory::default();
    let mut cached_model: Option<ClusterModel> = None;
    for n in 1..=iterations {
        let order = stream.next_order();
        let model = if options.recluster_each_step || cached_model.is_none() {
            let model = cluster_orders(
                state,
                &order,
                options.k,
                options.kmeans_seed.wrapping_add(n as u64),
            )?;
            cached_model = Some(model);
            cached_model.as_ref().unwrap()
        } else {
            cached_model.as_ref().unwrap()
        };

        let silhouette = model.silhouette_score().unwrap_or(f64::NAN);
        let triangle_area = model.center_triangle_area();

        let pick_map = compute_pick_map(state, &order)?;
        let all_stops = pick_map.stops();
        let (route_len_exact, route_len_clustered) = match &options.routes {
            Some(cfg) if route_due(cfg.schedule, n, iterations) => {
                let (exact, approx) = evaluate_routes(state, &all_stops, cfg, n)?;
                (exact, approx)
            }
            _ => (None, None),
        };

        let sizes = model.pick_sets.iter().map(|s| s.node_count()).collect();
        let centers = model.centers.clone();
        let covariances = model.covariances.clone();

        let outcome = process_order(state, &order, model)?;
        if options.validate_each_step {
            state.validate()?;
        }

        trajectory.records.push(TrajectoryRecord {
            iteration: n,
            cluster_sizes: sizes,
            centers,
            covariances,
            silhouette,
            triangle_area,
            relocations: outcome.relocations,
            blocked: outcome.blocked,
            order_size: order.total_parcels(),
            parcels_removed: outcome.parcels_removed,
            parcels_added: outcome.parcels_added,
            unfilled: outcome.unfilled,
            stop_count: all_stops.stop_count(),
            post_state_digest: state.digest(),
            route_len_exact,
            route_len_clustered,
        });
    }
    Ok(trajectory)
}

/// Optimal (Held-Karp oracle) and cluster-decomposed route lengths over the
/// current stop set. The oracle is skipped above 20 stops.
fn evaluate_routes(
    state: &WarehouseState,
    stops: &PickSets,
    cfg: &RouteRecording,
    iteration: u32,
) -> Result<(Option<i64>, Option<i64>)> {
    let positions: Vec<(u32, u32)> = stops.stops().collect();
    if positions.is_empty() {
        return Ok((None, None));
    }
    let dm = DistanceMatrix::from_grid(state.dims(), &positions)?;
    let exact = if positions.len() <= 20 {
        Some(held_karp_open_route(&dm)?.total_length)
    } else {
        None
    };
    let labels = if positions.len() == 1 {
        vec![0]
    } else {
        let points: Vec<Point> = positions
            .iter()
            .map(|&(i, j)| (i as f64, j as f64))
            .collect();
        let k = cfg.route_clusters.min(points.len()).max(1);
        crate::clustering::kmeans(&points, k, cfg.seed.wrapping_add(iteration as u64))?
            .assignment
    };
    let approx = clustered_route(&dm, &labels, cfg.exhaustive_limit)?.total_length;
    Ok((exact, Some(approx)))
}
