//! K-means clustering of purchase orders and cluster-quality scoring.
//!
//! Purchase orders are clustered by the mean rack position of their
//! articles. Each cluster then carries the union of its purchase orders'
//! picking nodes, a frequency-weighted stop set, a center (mean stop
//! position over picking nodes) and a 2x2 population covariance. Cluster
//! quality is measured by silhouette scores over the frequency-weighted
//! stops and, for three clusters, by the area of the center triangle.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Coord;
use crate::orders::Order;
use crate::state::{ArticleId, WarehouseState};

/// A 2-D point in the rack plane.
pub type Point = (f64, f64);

fn dist_sq(a: Point, b: Point) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    dx * dx + dy * dy
}

/// Result of a Lloyd run.
#[derive(Debug, Clone, PartialEq)]
pub struct KmeansFit {
    /// Point index -> cluster index in `0..k`.
    pub assignment: Vec<usize>,
    pub centroids: Vec<Point>,
    /// Within-cluster sum of squares after each Lloyd iteration.
    pub wcss_trace: Vec<f64>,
    pub iterations: usize,
}

const MAX_LLOYD_ITERATIONS: usize = 100;

/// Lloyd's algorithm from k-means++ seeding, deterministic per seed.
///
/// Ties in assignment go to the lowest cluster index. A cluster left empty
/// after an assignment step is re-seeded to the point farthest from its
/// current centroid (donor clusters keep at least one point). Terminates
/// when assignments are stable or after 100 iterations.
pub fn kmeans(points: &[Point], k: usize, seed: u64) -> Result<KmeansFit> {
    if k == 0 {
        return Err(Error::Clustering("k must be >= 1".into()));
    }
    if points.len() < k {
        return Err(Error::Clustering(format!(
            "{} points cannot fill {k} clusters",
            points.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_plus_plus(points, k, &mut rng);
    let mut assignment = vec![usize::MAX; points.len()];
    let mut wcss_trace = Vec::new();
    let mut iterations = 0;

    loop {
        iterations += 1;
        let mut next: Vec<usize> = points
            .iter()
            .map(|p| nearest_centroid(*p, &centroids))
            .collect();
        reseed_empty_clusters(points, &centroids, &mut next, k);

        // Update step: centroid = mean of members.
        let mut sums = vec![(0.0f64, 0.0f64, 0usize); k];
        for (p, &c) in points.iter().zip(next.iter()) {
            sums[c].0 += p.0;
            sums[c].1 += p.1;
            sums[c].2 += 1;
        }
        for (c, sum) in sums.iter().enumerate() {
            if sum.2 > 0 {
                centroids[c] = (sum.0 / sum.2 as f64, sum.1 / sum.2 as f64);
            }
        }

        let wcss: f64 = points
            .iter()
            .zip(next.iter())
            .map(|(p, &c)| dist_sq(*p, centroids[c]))
            .sum();
        wcss_trace.push(wcss);

        let stable = next == assignment;
        assignment = next;
        if stable || iterations >= MAX_LLOYD_ITERATIONS {
            break;
        }
    }

    Ok(KmeansFit { assignment, centroids, wcss_trace, iterations })
}

fn nearest_centroid(p: Point, centroids: &[Point]) -> usize {
    let mut best = 0;
    let mut best_d = dist_sq(p, centroids[0]);
    for (c, centroid) in centroids.iter().enumerate().skip(1) {
        let d = dist_sq(p, *centroid);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// k-means++: first centroid uniform, then each next centroid drawn with
/// probability proportional to the squared distance to the nearest chosen
/// centroid. A zero total (all points on chosen centroids) falls back to a
/// uniform draw.
fn seed_plus_plus(points: &[Point], k: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..points.len())]);
    while centroids.len() < k {
        let d2: Vec<f64> = points
            .iter()
            .map(|p| {
                centroids
                    .iter()
                    .map(|c| dist_sq(*p, *c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let idx = if total == 0.0 {
            rng.gen_range(0..points.len())
        } else {
            let r = rng.gen::<f64>() * total;
            let mut cum = 0.0;
            let mut chosen = points.len() - 1;
            for (ix, w) in d2.iter().enumerate() {
                cum += w;
                if cum > r {
                    chosen = ix;
                    break;
                }
            }
            chosen
        };
        centroids.push(points[idx]);
    }
    centroids
}

/// Move each empty cluster's centroid onto the point farthest from its
/// assigned centroid and reassign that point. Only points strictly away
/// from their centroid qualify (donor clusters keep at least one member),
/// so fully coincident point sets leave the surplus clusters empty instead
/// of being split apart.
fn reseed_empty_clusters(
    points: &[Point],
    centroids: &[Point],
    assignment: &mut [usize],
    k: usize,
) {
    let mut sizes = vec![0usize; k];
    for &c in assignment.iter() {
        sizes[c] += 1;
    }
    let mut reassigned: Vec<usize> = Vec::new();
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut farthest: Option<(usize, f64)> = None;
        for (ix, p) in points.iter().enumerate() {
            let donor = assignment[ix];
            if sizes[donor] < 2 || reassigned.contains(&ix) {
                continue;
            }
            let d = dist_sq(*p, centroids[donor]);
            if d > 0.0 && farthest.map_or(true, |(_, best)| d > best) {
                farthest = Some((ix, d));
            }
        }
        if let Some((ix, _)) = farthest {
            sizes[assignment[ix]] -= 1;
            assignment[ix] = empty;
            sizes[empty] += 1;
            reassigned.push(ix);
        }
    }
}

/// Picking nodes of one cluster with the induced stop projection.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PickSets {
    /// Shelf nodes to pick from.
    pub pick_nodes: BTreeSet<Coord>,
    /// Stop `(i, j)` -> number of picking nodes at that rack.
    pub stop_frequency: BTreeMap<(u32, u32), u32>,
}

impl PickSets {
    pub fn from_nodes(nodes: impl IntoIterator<Item = Coord>) -> Self {
        let mut sets = PickSets::default();
        for node in nodes {
            sets.insert(node);
        }
        sets
    }

    pub fn insert(&mut self, node: Coord) {
        if self.pick_nodes.insert(node) {
            *self.stop_frequency.entry(node.stop()).or_insert(0) += 1;
        }
    }

    pub fn stops(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.stop_frequency.keys().copied()
    }

    pub fn stop_count(&self) -> usize {
        self.stop_frequency.len()
    }

    pub fn node_count(&self) -> usize {
        self.pick_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pick_nodes.is_empty()
    }
}

/// Symmetric 2x2 covariance of stop positions over a cluster's picking
/// nodes (population divisor).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Covariance2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl Covariance2 {
    /// Closed-form eigenvalues of the symmetric matrix.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let tr = self.xx + self.yy;
        let det = self.xx * self.yy - self.xy * self.xy;
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        (tr / 2.0 - disc, tr / 2.0 + disc)
    }
}

/// Center and covariance of a pick set: the mean and population covariance
/// of `(i, j)` over its picking nodes, node multiplicity included.
pub fn cluster_stats(picks: &PickSets) -> Option<(Point, Covariance2)> {
    let n = picks.node_count();
    if n == 0 {
        return None;
    }
    let mut sx = 0.0;
    let mut sy = 0.0;
    for node in &picks.pick_nodes {
        sx += node.i as f64;
        sy += node.j as f64;
    }
    let center = (sx / n as f64, sy / n as f64);
    let mut cov = Covariance2::default();
    for node in &picks.pick_nodes {
        let dx = node.i as f64 - center.0;
        let dy = node.j as f64 - center.1;
        cov.xx += dx * dx;
        cov.yy += dy * dy;
        cov.xy += dx * dy;
    }
    cov.xx /= n as f64;
    cov.yy /= n as f64;
    cov.xy /= n as f64;
    Some((center, cov))
}

/// Assignment of purchase orders to clusters plus per-cluster geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    /// Purchase-order index -> cluster index.
    pub assignment: Vec<usize>,
    /// Article -> cluster, via the first purchase order containing it.
    pub article_cluster: BTreeMap<ArticleId, usize>,
    pub pick_sets: Vec<PickSets>,
    /// Per-cluster center; empty clusters fall back to the k-means
    /// centroid so downstream geometry stays total.
    pub centers: Vec<Point>,
    pub covariances: Vec<Covariance2>,
}

/// Cluster the purchase orders of `order` by the mean rack position of
/// their articles in `state`, then derive per-cluster pick sets, centers
/// and covariances.
///
/// A perturbed order can list one article in two purchase orders; its
/// picking node is attributed to the first containing purchase order so the
/// per-cluster pick sets always partition the order's picking nodes.
pub fn cluster_orders(
    state: &WarehouseState,
    order: &Order,
    k: usize,
    seed: u64,
) -> Result<ClusterModel> {
    let mut features = Vec::with_capacity(order.purchases.len());
    for purchase in &order.purchases {
        if purchase.lines.is_empty() {
            return Err(Error::Clustering("purchase order without lines".into()));
        }
        let mut sx = 0.0;
        let mut sy = 0.0;
        for &(article, _) in &purchase.lines {
            let node = state.locate_article(article)?;
            sx += node.i as f64;
            sy += node.j as f64;
        }
        let n = purchase.lines.len() as f64;
        features.push((sx / n, sy / n));
    }

    let fit = kmeans(&features, k, seed)?;

    let mut article_cluster = BTreeMap::new();
    let mut pick_sets = vec![PickSets::default(); k];
    for (p_ix, purchase) in order.purchases.iter().enumerate() {
        for &(article, _) in &purchase.lines {
            let cluster = *article_cluster
                .entry(article)
                .or_insert(fit.assignment[p_ix]);
            pick_sets[cluster].insert(state.locate_article(article)?);
        }
    }

    let mut centers = Vec::with_capacity(k);
    let mut covariances = Vec::with_capacity(k);
    for (c, picks) in pick_sets.iter().enumerate() {
        match cluster_stats(picks) {
            Some((center, cov)) => {
                centers.push(center);
                covariances.push(cov);
            }
            None => {
                centers.push(fit.centroids[c]);
                covariances.push(Covariance2::default());
            }
        }
    }

    Ok(ClusterModel {
        k,
        assignment: fit.assignment,
        article_cluster,
        pick_sets,
        centers,
        covariances,
    })
}

impl ClusterModel {
    pub fn nonempty_clusters(&self) -> usize {
        self.pick_sets.iter().filter(|s| !s.is_empty()).count()
    }

    /// Frequency-weighted stop positions with cluster labels: each stop of
    /// cluster `l` appears once per picking node at that stop.
    pub fn weighted_stop_points(&self) -> (Vec<Point>, Vec<usize>) {
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for (c, picks) in self.pick_sets.iter().enumerate() {
            for ((i, j), freq) in &picks.stop_frequency {
                for _ in 0..*freq {
                    points.push((*i as f64, *j as f64));
                    labels.push(c);
                }
            }
        }
        (points, labels)
    }

    /// Silhouette score over the frequency-weighted stop positions.
    pub fn silhouette_score(&self) -> Result<f64> {
        let (points, labels) = self.weighted_stop_points();
        silhouette(&points, &labels)
    }

    /// Shoelace area of the three cluster centers; `None` unless k = 3.
    pub fn center_triangle_area(&self) -> Option<f64> {
        match self.centers.as_slice() {
            [a, b, c] => Some(triangle_area([*a, *b, *c])),
            _ => None,
        }
    }

    /// One CSV row per stop: `i,j,frequency,cluster`.
    pub fn stops_csv(&self) -> String {
        let mut out = String::from("i,j,frequency,cluster\n");
        for (c, picks) in self.pick_sets.iter().enumerate() {
            for ((i, j), freq) in &picks.stop_frequency {
                out.push_str(&format!("{i},{j},{freq},{c}\n"));
            }
        }
        out
    }

    /// Companion CSV with per-cluster center and covariance entries.
    pub fn centers_csv(&self) -> String {
        use crate::util::fmt_g12;
        let mut out = String::from("cluster,nodes,stops,x,y,cov_xx,cov_yy,cov_xy\n");
        for c in 0..self.k {
            let picks = &self.pick_sets[c];
            let center = self.centers[c];
            let cov = self.covariances[c];
            out.push_str(&format!(
                "{c},{},{},{},{},{},{},{}\n",
                picks.node_count(),
                picks.stop_count(),
                fmt_g12(center.0),
                fmt_g12(center.1),
                fmt_g12(cov.xx),
                fmt_g12(cov.yy),
                fmt_g12(cov.xy),
            ));
        }
        out
    }
}

/// Mean silhouette value over all points, Euclidean distances.
///
/// `s(i) = (b(i) - a(i)) / max(a(i), b(i))` with `a` the mean distance to
/// the point's own cluster and `b` the smallest mean distance to another
/// cluster. Points in singleton clusters score 0, as does a point whose
/// `a` and `b` are both 0 (coincident clusters).
pub fn silhouette(points: &[Point], labels: &[usize]) -> Result<f64> {
    if points.len() != labels.len() {
        return Err(Error::Clustering(format!(
            "{} points vs {} labels",
            points.len(),
            labels.len()
        )));
    }
    if points.is_empty() {
        return Err(Error::Clustering("silhouette of an empty point set".into()));
    }
    let k = labels.iter().max().unwrap() + 1;
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::Clustering(
            "silhouette needs at least two nonempty clusters".into(),
        ));
    }

    let mut total = 0.0;
    for (ix, p) in points.iter().enumerate() {
        let own = labels[ix];
        if sizes[own] == 1 {
            continue; // s(i) = 0 by the singleton convention
        }
        let mut sums = vec![0.0f64; k];
        for (jx, q) in points.iter().enumerate() {
            if ix == jx {
                continue;
            }
            sums[labels[jx]] += dist_sq(*p, *q).sqrt();
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let mut b = f64::INFINITY;
        for c in 0..k {
            if c != own && sizes[c] > 0 {
                b = b.min(sums[c] / sizes[c] as f64);
            }
        }
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / points.len() as f64)
}

/// Absolute shoelace area of the triangle spanned by three points.
pub fn triangle_area(centers: [Point; 3]) -> f64 {
    let [(x1, y1), (x2, y2), (x3, y3)] = centers;
    ((x1 * (y2 - y3) + x2 * (y3 - y1) + x3 * (y1 - y2)) / 2.0).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orders::generate_disjoint_order;
    use crate::state::{MaxBalance, StateConfig};
    use crate::GridDims;

    #[test]
    fn separated_triples_form_their_own_clusters() {
        let points = vec![
            (0.0, 0.0), (0.0, 0.0), (0.0, 0.0),
            (10.0, 10.0), (10.0, 10.0), (10.0, 10.0),
            (-10.0, 10.0), (-10.0, 10.0), (-10.0, 10.0),
        ];
        let fit = kmeans(&points, 3, 42).unwrap();
        for group in [(0, 1), (1, 2), (3, 4), (4, 5), (6, 7), (7, 8)] {
            assert_eq!(fit.assignment[group.0], fit.assignment[group.1]);
        }
        assert_ne!(fit.assignment[0], fit.assignment[3]);
        assert_ne!(fit.assignment[3], fit.assignment[6]);
        assert_ne!(fit.assignment[0], fit.assignment[6]);
    }

    #[test]
    fn single_cluster_centroid_is_the_mean() {
        let points = vec![(1.0, 2.0), (3.0, 6.0), (5.0, 4.0)];
        let fit = kmeans(&points, 1, 0).unwrap();
        assert_eq!(fit.centroids[0], (3.0, 4.0));
    }

    #[test]
    fn kmeans_rejects_more_clusters_than_points() {
        assert!(kmeans(&[(0.0, 0.0)], 2, 0).is_err());
    }

    #[test]
    fn wcss_trace_is_monotone_nonincreasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for round in 0..20 {
            let points: Vec<Point> = (0..30)
                .map(|_| (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)))
                .collect();
            let fit = kmeans(&points, 4, round).unwrap();
            for w in fit.wcss_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "wcss rose: {:?}", fit.wcss_trace);
            }
        }
    }

    /// Independent Lloyd reference: same seeding and update rules coded
    /// from the documented procedure, compared step for step.
    fn reference_lloyd(points: &[Point], k: usize, seed: u64) -> (Vec<usize>, Vec<Point>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = points.len();
        let d2 = |a: Point, b: Point| (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
        let mut cs: Vec<Point> = vec![points[rng.gen_range(0..n)]];
        while cs.len() < k {
            let weights: Vec<f64> = points
                .iter()
                .map(|p| cs.iter().map(|c| d2(*p, *c)).fold(f64::INFINITY, f64::min))
                .collect();
            let total: f64 = weights.iter().sum();
            let pick = if total == 0.0 {
                rng.gen_range(0..n)
            } else {
                let r = rng.gen::<f64>() * total;
                let mut cum = 0.0;
                let mut chosen = n - 1;
                for (ix, w) in weights.iter().enumerate() {
                    cum += w;
                    if cum > r {
                        chosen = ix;
                        break;
                    }
                }
                chosen
            };
            cs.push(points[pick]);
        }
        let mut assignment = vec![usize::MAX; n];
        for _ in 0..100 {
            let mut next = Vec::with_capacity(n);
            for p in points {
                let mut best = 0;
                for c in 1..k {
                    if d2(*p, cs[c]) < d2(*p, cs[best]) {
                        best = c;
                    }
                }
                next.push(best);
            }
            // Empty-cluster reseed: farthest point from its centroid.
            let mut sizes = vec![0usize; k];
            for &c in &next {
                sizes[c] += 1;
            }
            let mut stolen: Vec<usize> = Vec::new();
            for empty in 0..k {
                if sizes[empty] > 0 {
                    continue;
                }
                let mut far: Option<(usize, f64)> = None;
                for ix in 0..n {
                    if sizes[next[ix]] < 2 || stolen.contains(&ix) {
                        continue;
                    }
                    let d = d2(points[ix], cs[next[ix]]);
                    if d > 0.0 && far.map_or(true, |(_, best)| d > best) {
                        far = Some((ix, d));
                    }
                }
                if let Some((ix, _)) = far {
                    sizes[next[ix]] -= 1;
                    next[ix] = empty;
                    sizes[empty] += 1;
                    stolen.push(ix);
                }
            }
            for c in 0..k {
                if sizes[c] == 0 {
                    continue;
                }
                let (mut sx, mut sy) = (0.0, 0.0);
                for ix in 0..n {
                    if next[ix] == c {
                        sx += points[ix].0;
                        sy += points[ix].1;
                    }
                }
                cs[c] = (sx / sizes[c] as f64, sy / sizes[c] as f64);
            }
            let done = next == assignment;
            assignment = next;
            if done {
                break;
            }
        }
        (assignment, cs)
    }

    #[test]
    fn kmeans_matches_reference_run() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let points: Vec<Point> = (0..20)
            .map(|_| (rng.gen_range(1.0..10.0), rng.gen_range(1.0..10.0)))
            .collect();
        for seed in [0u64, 1, 2, 3, 4] {
            let fit = kmeans(&points, 3, seed).unwrap();
            let (ref_assignment, ref_centroids) = reference_lloyd(&points, 3, seed);
            assert_eq!(fit.assignment, ref_assignment, "seed {seed}");
            for (a, b) in fit.centroids.iter().zip(ref_centroids.iter()) {
                assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_point_cluster_stats_match_hand_computation() {
        let picks = PickSets::from_nodes([Coord::new(1, 1, 1), Coord::new(3, 3, 2)]);
        let (center, cov) = cluster_stats(&picks).unwrap();
        assert_eq!(center, (2.0, 2.0));
        assert_eq!(cov.xx, 1.0);
        assert_eq!(cov.yy, 1.0);
        assert_eq!(cov.xy, 1.0);
    }

    #[test]
    fn pick_set_projection_counts_levels() {
        let picks = PickSets::from_nodes([
            Coord::new(2, 5, 1),
            Coord::new(2, 5, 4),
            Coord::new(2, 5, 4), // duplicate node ignored
            Coord::new(3, 1, 2),
        ]);
        assert_eq!(picks.node_count(), 3);
        assert_eq!(picks.stop_count(), 2);
        assert_eq!(picks.stop_frequency[&(2, 5)], 2);
        assert_eq!(picks.stop_frequency[&(3, 1)], 1);
    }

    #[test]
    fn silhouette_of_far_duplicated_clusters_is_one() {
        let points = vec![(0.0, 0.0), (0.0, 0.0), (10.0, 10.0), (10.0, 10.0)];
        let labels = vec![0, 0, 1, 1];
        let s = silhouette(&points, &labels).unwrap();
        assert!((s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn silhouette_of_singletons_is_zero() {
        let points = vec![(0.0, 0.0), (5.0, 5.0)];
        let labels = vec![0, 1];
        assert_eq!(silhouette(&points, &labels).unwrap(), 0.0);
    }

    #[test]
    fn silhouette_rejects_single_cluster() {
        let points = vec![(0.0, 0.0), (1.0, 1.0)];
        assert!(silhouette(&points, &[0, 0]).is_err());
    }

    /// Textbook double-summation oracle for the silhouette score.
    fn silhouette_oracle(points: &[Point], labels: &[usize]) -> f64 {
        let n = points.len();
        let d = |a: Point, b: Point| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        let k = labels.iter().max().unwrap() + 1;
        let mut total = 0.0;
        for i in 0..n {
            let own = labels[i];
            let own_size = labels.iter().filter(|&&l| l == own).count();
            if own_size == 1 {
                continue;
            }
            let a_i = (0..n)
                .filter(|&j| j != i && labels[j] == own)
                .map(|j| d(points[i], points[j]))
                .sum::<f64>()
                / (own_size - 1) as f64;
            let mut b_i = f64::INFINITY;
            for c in 0..k {
                if c == own {
                    continue;
                }
                let size = labels.iter().filter(|&&l| l == c).count();
                if size == 0 {
                    continue;
                }
                let mean = (0..n)
                    .filter(|&j| labels[j] == c)
                    .map(|j| d(points[i], points[j]))
                    .sum::<f64>()
                    / size as f64;
                b_i = b_i.min(mean);
            }
            if a_i.max(b_i) > 0.0 {
                total += (b_i - a_i) / a_i.max(b_i);
            }
        }
        total / n as f64
    }

    #[test]
    fn silhouette_matches_double_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let points: Vec<Point> = (0..20)
                .map(|_| (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)))
                .collect();
            let labels: Vec<usize> = (0..20).map(|_| rng.gen_range(0..2)).collect();
            if labels.iter().all(|&l| l == labels[0]) {
                continue;
            }
            let ours = silhouette(&points, &labels).unwrap();
            let oracle = silhouette_oracle(&points, &labels);
            assert!((ours - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn triangle_area_basics() {
        assert_eq!(triangle_area([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]), 0.5);
        assert_eq!(triangle_area([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]), 0.0);
    }

    fn small_state(seed: u64) -> WarehouseState {
        WarehouseState::init_random(&StateConfig::small(seed)).unwrap()
    }

    #[test]
    fn cluster_model_partitions_picking_nodes() {
        let state = small_state(3);
        let order = generate_disjoint_order(890, 20, 10, 5).unwrap();
        let model = cluster_orders(&state, &order, 3, 8).unwrap();
        let mut seen = BTreeSet::new();
        let mut total = 0;
        for picks in &model.pick_sets {
            total += picks.node_count();
            for node in &picks.pick_nodes {
                assert!(seen.insert(*node), "node {node} in two clusters");
            }
        }
        assert_eq!(total, 200);
        assert_eq!(seen.len(), 200);
        // Fresh random placement spreads every cluster over the grid.
        assert_eq!(model.nonempty_clusters(), 3);
        for cov in &model.covariances {
            let (lo, _) = cov.eigenvalues();
            assert!(lo >= -1e-9);
        }
    }

    #[test]
    fn coincident_articles_collapse_to_one_cluster() {
        // A 1x1x3 warehouse: 3 articles on a single rack.
        let config = StateConfig {
            dims: GridDims { n_x: 1, n_y: 1, n_z: 3 },
            article_count: 3,
            max_balance: MaxBalance::Uniform(10),
            empty_rack_count: 0,
            rng_seed: 0,
        };
        let state = WarehouseState::init_random(&config).unwrap();
        let order = Order {
            purchases: (1..=3)
                .map(|a| crate::orders::PurchaseOrder { lines: vec![(a, 1)] })
                .collect(),
        };
        let model = cluster_orders(&state, &order, 3, 1).unwrap();
        assert_eq!(model.nonempty_clusters(), 1);
        let nonempty = model.pick_sets.iter().find(|p| !p.is_empty()).unwrap();
        assert_eq!(nonempty.node_count(), 3);
        let c = model
            .pick_sets
            .iter()
            .position(|p| !p.is_empty())
            .unwrap();
        assert_eq!(model.covariances[c], Covariance2::default());
    }

    #[test]
    fn translation_equivariance_on_integer_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let points: Vec<Point> = (0..15)
            .map(|_| (rng.gen_range(0..50) as f64, rng.gen_range(0..50) as f64))
            .collect();
        let shifted: Vec<Point> = points.iter().map(|p| (p.0 + 13.0, p.1 - 7.0)).collect();
        let fit = kmeans(&points, 3, 4).unwrap();
        let fit_shifted = kmeans(&shifted, 3, 4).unwrap();
        assert_eq!(fit.assignment, fit_shifted.assignment);
        // Centroid means round differently after translation; allow 1 ulp-ish.
        for (a, b) in fit.centroids.iter().zip(fit_shifted.centroids.iter()) {
            assert!((a.0 + 13.0 - b.0).abs() < 1e-9);
            assert!((a.1 - 7.0 - b.1).abs() < 1e-9);
        }
        let s = silhouette(&points, &fit.assignment).unwrap();
        let s_shifted = silhouette(&shifted, &fit_shifted.assignment).unwrap();
        assert!((s - s_shifted).abs() < 1e-9);
    }
}
