//! Warehouse state: the article placement array `A`, the balance array `M`
//! and every placement query.
//!
//! Each shelf node carries at most one article type (0 marks an empty node)
//! and a parcel balance bounded by the per-article capacity. Every nonzero
//! article type lives at exactly one node for the whole lifetime of the
//! state; relocations move that single copy.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Coord, GridDims};
use crate::util::fnv1a64;

/// Article type identifier. Valid articles are `1..=N`; 0 marks empty nodes.
pub type ArticleId = u32;

/// Per-article capacity of a single node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaxBalance {
    /// Every article type shares one capacity.
    Uniform(u32),
    /// `capacities[n-1]` is the capacity of article `n`.
    PerArticle(Vec<u32>),
}

impl MaxBalance {
    pub fn for_article(&self, article: ArticleId) -> u32 {
        debug_assert!(article >= 1);
        match self {
            MaxBalance::Uniform(m) => *m,
            MaxBalance::PerArticle(v) => v[(article - 1) as usize],
        }
    }

    fn validate(&self, article_count: u32) -> Result<()> {
        match self {
            MaxBalance::Uniform(m) if *m >= 1 => Ok(()),
            MaxBalance::Uniform(m) => Err(Error::Config(format!(
                "uniform max balance must be >= 1, got {m}"
            ))),
            MaxBalance::PerArticle(v) => {
                if v.len() != article_count as usize {
                    return Err(Error::Config(format!(
                        "per-article balances cover {} articles, expected {article_count}",
                        v.len()
                    )));
                }
                if let Some(p) = v.iter().position(|&m| m == 0) {
                    return Err(Error::Config(format!(
                        "article {} has max balance 0",
                        p + 1
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Everything needed to build a randomized initial warehouse state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateConfig {
    pub dims: GridDims,
    /// Number of distinct article types `N`.
    pub article_count: u32,
    pub max_balance: MaxBalance,
    /// Whole racks (all k levels of an `(i, j)` position) left empty.
    pub empty_rack_count: u32,
    pub rng_seed: u64,
}

impl StateConfig {
    /// The paper-scale small warehouse: 10x10x10 nodes, 890 articles,
    /// 11 empty racks, capacity 10 everywhere.
    pub fn small(rng_seed: u64) -> Self {
        Self {
            dims: GridDims { n_x: 10, n_y: 10, n_z: 10 },
            article_count: 890,
            max_balance: MaxBalance::Uniform(10),
            empty_rack_count: 11,
            rng_seed,
        }
    }

    /// The large configuration: 100x100x10 nodes, 89 000 articles,
    /// 1100 empty racks.
    pub fn large(rng_seed: u64) -> Self {
        Self {
            dims: GridDims { n_x: 100, n_y: 100, n_z: 10 },
            article_count: 89_000,
            max_balance: MaxBalance::Uniform(10),
            empty_rack_count: 1_100,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        GridDims::new(self.dims.n_x, self.dims.n_y, self.dims.n_z)?;
        if self.article_count == 0 {
            return Err(Error::Config("article count must be >= 1".into()));
        }
        self.max_balance.validate(self.article_count)?;
        if self.empty_rack_count as usize > self.dims.rack_count() {
            return Err(Error::Config(format!(
                "{} empty racks exceed the {} rack positions",
                self.empty_rack_count,
                self.dims.rack_count()
            )));
        }
        let empty_nodes = self.empty_rack_count as usize * self.dims.n_z as usize;
        let stocked = self.dims.node_count() - empty_nodes;
        if self.article_count as usize != stocked {
            return Err(Error::Config(format!(
                "article count {} must equal the {} nonempty nodes ({} total - {} empty)",
                self.article_count,
                stocked,
                self.dims.node_count(),
                empty_nodes
            )));
        }
        Ok(())
    }
}

/// The warehouse state `(A, M)` plus derived indexes.
#[derive(Debug, Clone, PartialEq)]
pub struct WarehouseState {
    dims: GridDims,
    max_balance: MaxBalance,
    article_count: u32,
    /// Article id per node, 0 = empty. Indexed by `GridDims::node_index`.
    articles: Vec<u32>,
    /// Parcel balance per node.
    balances: Vec<u32>,
    /// `article_index[n]` is the flattened node holding article `n`
    /// (slot 0 unused).
    article_index: Vec<Option<u32>>,
    /// Flattened indexes of nodes with article 0, kept sorted.
    empty_nodes: BTreeSet<u32>,
    /// Per-node pick telemetry: how many orders picked from each node.
    pick_counts: Vec<u64>,
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"WSNP";
const SNAPSHOT_VERSION: u32 = 1;

impl WarehouseState {
    /// Build a randomized initial state: `empty_rack_count` whole racks are
    /// drawn uniformly without replacement, every remaining node receives a
    /// unique article type in `1..=N` (placement shuffled), fully stocked.
    pub fn init_random(config: &StateConfig) -> Result<Self> {
        config.validate()?;
        let dims = config.dims;
        let node_count = dims.node_count();
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);

        let mut empty_racks: Vec<usize> = sample(
            &mut rng,
            dims.rack_count(),
            config.empty_rack_count as usize,
        )
        .into_vec();
        empty_racks.sort_unstable();

        let mut articles = vec![0u32; node_count];
        let mut balances = vec![0u32; node_count];
        let mut empty_nodes = BTreeSet::new();
        // Rack r covers the (i, j) with i = r / n_y + 1, j = r % n_y + 1 in
        // node-index order; mark all its k levels empty.
        let mut is_empty_rack = vec![false; dims.rack_count()];
        for r in &empty_racks {
            is_empty_rack[*r] = true;
        }

        let mut stocked_nodes: Vec<u32> = Vec::with_capacity(config.article_count as usize);
        for idx in 0..node_count {
            let rack = idx / dims.n_z as usize;
            if is_empty_rack[rack] {
                empty_nodes.insert(idx as u32);
            } else {
                stocked_nodes.push(idx as u32);
            }
        }

        let mut placement: Vec<u32> = (1..=config.article_count).collect();
        placement.shuffle(&mut rng);

        let mut article_index = vec![None; config.article_count as usize + 1];
        for (node, article) in stocked_nodes.iter().zip(placement.iter()) {
            articles[*node as usize] = *article;
            balances[*node as usize] = config.max_balance.for_article(*article);
            article_index[*article as usize] = Some(*node);
        }

        Ok(Self {
            dims,
            max_balance: config.max_balance.clone(),
            article_count: config.article_count,
            articles,
            balances,
            article_index,
            empty_nodes,
            pick_counts: vec![0; node_count],
        })
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn article_count(&self) -> u32 {
        self.article_count
    }

    pub fn article_at(&self, c: Coord) -> ArticleId {
        self.articles[self.dims.node_index(c)]
    }

    pub fn balance_at(&self, c: Coord) -> u32 {
        self.balances[self.dims.node_index(c)]
    }

    pub fn pick_count_at(&self, c: Coord) -> u64 {
        self.pick_counts[self.dims.node_index(c)]
    }

    pub fn max_balance_of(&self, article: ArticleId) -> u32 {
        self.max_balance.for_article(article)
    }

    /// Total parcels currently stored.
    pub fn total_stock(&self) -> u64 {
        self.balances.iter().map(|&b| b as u64).sum()
    }

    /// Coordinates with article 0, in lexicographic `(i, j, k)` order.
    pub fn find_empty_nodes(&self) -> Vec<Coord> {
        self.empty_node_iter().collect()
    }

    /// Allocation-free variant of [`find_empty_nodes`](Self::find_empty_nodes),
    /// same lexicographic order.
    pub fn empty_node_iter(&self) -> impl Iterator<Item = Coord> + '_ {
        self.empty_nodes.iter().map(|&ix| self.dims.coord_at(ix as usize))
    }

    pub fn empty_node_count(&self) -> usize {
        self.empty_nodes.len()
    }

    /// The unique node holding `article`.
    pub fn locate_article(&self, article: ArticleId) -> Result<Coord> {
        if article == 0 || article > self.article_count {
            return Err(Error::ArticleNotFound(article));
        }
        self.article_index[article as usize]
            .map(|ix| self.dims.coord_at(ix as usize))
            .ok_or(Error::ArticleNotFound(article))
    }

    /// Remove up to `requested` parcels from the node, clamping at zero.
    /// Returns the number actually picked.
    pub fn pick_parcels(&mut self, c: Coord, requested: u32) -> u32 {
        let ix = self.dims.node_index(c);
        let picked = requested.min(self.balances[ix]);
        self.balances[ix] -= picked;
        picked
    }

    pub fn record_pick_visit(&mut self, c: Coord) {
        let ix = self.dims.node_index(c);
        self.pick_counts[ix] += 1;
    }

    /// Refill a stocked node to its article's capacity (the in-place
    /// restock used when a drained article already sits at its best stop).
    pub fn replenish_node(&mut self, at: Coord) -> Result<u32> {
        let ix = self.dims.node_index(at);
        let article = self.articles[ix];
        if article == 0 {
            return Err(Error::Config(format!("cannot replenish empty node {at}")));
        }
        let capacity = self.max_balance.for_article(article);
        let added = capacity - self.balances[ix];
        self.balances[ix] = capacity;
        Ok(added)
    }

    /// Move `article` to the empty node `to` and top its balance up to the
    /// article's capacity. The source node must already be drained; it
    /// becomes empty and immediately reusable.
    pub fn relocate_article(&mut self, article: ArticleId, to: Coord) -> Result<Coord> {
        let from_ix = self.article_index[article as usize]
            .ok_or(Error::ArticleNotFound(article))? as usize;
        if !self.dims.contains(to) {
            return Err(Error::OutOfGrid(to));
        }
        let to_ix = self.dims.node_index(to);
        if self.articles[to_ix] != 0 {
            return Err(Error::Config(format!(
                "relocation target {to} already holds article {}",
                self.articles[to_ix]
            )));
        }
        if self.balances[from_ix] != 0 {
            return Err(Error::Config(format!(
                "article {article} still has {} parcels at its old node",
                self.balances[from_ix]
            )));
        }
        self.articles[from_ix] = 0;
        self.empty_nodes.insert(from_ix as u32);
        self.articles[to_ix] = article;
        self.balances[to_ix] = self.max_balance.for_article(article);
        self.empty_nodes.remove(&(to_ix as u32));
        self.article_index[article as usize] = Some(to_ix as u32);
        Ok(self.dims.coord_at(from_ix))
    }

    /// Check every structural invariant. Trajectory tests run this after
    /// each public mutation.
    pub fn validate(&self) -> Result<()> {
        let node_count = self.dims.node_count();
        if self.articles.len() != node_count || self.balances.len() != node_count {
            return Err(Error::Config("array lengths disagree with dims".into()));
        }
        let mut seen = vec![false; self.article_count as usize + 1];
        for ix in 0..node_count {
            let a = self.articles[ix];
            let m = self.balances[ix];
            if a == 0 {
                if m != 0 {
                    return Err(Error::Config(format!(
                        "empty node {} carries {} parcels",
                        self.dims.coord_at(ix),
                        m
                    )));
                }
                if !self.empty_nodes.contains(&(ix as u32)) {
                    return Err(Error::Config(format!(
                        "empty node {} missing from the empty index",
                        self.dims.coord_at(ix)
                    )));
                }
                continue;
            }
            if a > self.article_count {
                return Err(Error::Config(format!("article id {a} out of range")));
            }
            if seen[a as usize] {
                return Err(Error::Config(format!(
                    "article {a} appears at more than one node"
                )));
            }
            seen[a as usize] = true;
            if m > self.max_balance.for_article(a) {
                return Err(Error::Config(format!(
                    "node {} exceeds capacity: {m} > {}",
                    self.dims.coord_at(ix),
                    self.max_balance.for_article(a)
                )));
            }
            if self.empty_nodes.contains(&(ix as u32)) {
                return Err(Error::Config(format!(
                    "stocked node {} listed as empty",
                    self.dims.coord_at(ix)
                )));
            }
            if self.article_index[a as usize] != Some(ix as u32) {
                return Err(Error::Config(format!(
                    "article index out of sync for article {a}"
                )));
            }
        }
        for (a, slot) in self.article_index.iter().enumerate().skip(1) {
            if slot.is_some() != seen[a] {
                return Err(Error::Config(format!(
                    "article index lists article {a} inconsistently"
                )));
            }
        }
        Ok(())
    }

    /// Serialize to the versioned little-endian snapshot format:
    /// magic, version, dims, N, capacities, `A` row-major, `M` row-major,
    /// pick counters.
    pub fn snapshot(&self) -> Vec<u8> {
        let node_count = self.dims.node_count();
        let mut out = Vec::with_capacity(32 + node_count * 16);
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        for v in [self.dims.n_x, self.dims.n_y, self.dims.n_z, self.article_count] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for article in 1..=self.article_count {
            out.extend_from_slice(&self.max_balance.for_article(article).to_le_bytes());
        }
        for &a in &self.articles {
            out.extend_from_slice(&a.to_le_bytes());
        }
        for &m in &self.balances {
            out.extend_from_slice(&m.to_le_bytes());
        }
        for &p in &self.pick_counts {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn restore(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        let magic = cur.take(4)?;
        if magic != SNAPSHOT_MAGIC {
            return Err(Error::Decode("bad snapshot magic".into()));
        }
        let version = cur.u32()?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::Decode(format!(
                "snapshot version {version} unsupported (expected {SNAPSHOT_VERSION})"
            )));
        }
        let n_x = cur.u32()?;
        let n_y = cur.u32()?;
        let n_z = cur.u32()?;
        let dims = GridDims::new(n_x, n_y, n_z).map_err(|e| Error::Decode(e.to_string()))?;
        let article_count = cur.u32()?;
        let mut capacities = Vec::with_capacity(article_count as usize);
        for _ in 0..article_count {
            capacities.push(cur.u32()?);
        }
        let node_count = dims.node_count();
        let mut articles = Vec::with_capacity(node_count);
        for _ in 0..node_count {
            articles.push(cur.u32()?);
        }
        let mut balances = Vec::with_capacity(node_count);
        for _ in 0..node_count {
            balances.push(cur.u32()?);
        }
        let mut pick_counts = Vec::with_capacity(node_count);
        for _ in 0..node_count {
            pick_counts.push(cur.u64()?);
        }
        if cur.pos != bytes.len() {
            return Err(Error::Decode(format!(
                "{} trailing bytes after snapshot payload",
                bytes.len() - cur.pos
            )));
        }

        let uniform = capacities.windows(2).all(|w| w[0] == w[1]);
        let max_balance = match (uniform, capacities.first()) {
            (true, Some(&m)) => MaxBalance::Uniform(m),
            (true, None) => MaxBalance::Uniform(1),
            (false, _) => MaxBalance::PerArticle(capacities),
        };

        let mut article_index = vec![None; article_count as usize + 1];
        let mut empty_nodes = BTreeSet::new();
        for (ix, &a) in articles.iter().enumerate() {
            if a == 0 {
                empty_nodes.insert(ix as u32);
            } else {
                if a > article_count {
                    return Err(Error::Decode(format!("article id {a} out of range")));
                }
                if article_index[a as usize].is_some() {
                    return Err(Error::Decode(format!(
                        "article {a} stored at two nodes in snapshot"
                    )));
                }
                article_index[a as usize] = Some(ix as u32);
            }
        }
        let state = Self {
            dims,
            max_balance,
            article_count,
            articles,
            balances,
            article_index,
            empty_nodes,
            pick_counts,
        };
        state.validate().map_err(|e| Error::Decode(e.to_string()))?;
        Ok(state)
    }

    /// Stable 64-bit digest of the full state.
    pub fn digest(&self) -> u64 {
        fnv1a64(&self.snapshot())
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Decode("truncated snapshot".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
