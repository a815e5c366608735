//! Picking orders and seeded order streams.
//!
//! An order is a batch of purchase orders, each listing distinct article
//! types with parcel quantities. Streams replay a base order either verbatim
//! (the recurring model) or with per-purchase perturbations: replacing the
//! first line or a uniformly chosen line with a fresh uniform article draw.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::ArticleId;

/// One customer order: distinct article types with quantities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PurchaseOrder {
    /// `(article, quantity)` pairs in insertion order. Types are distinct
    /// within one purchase order; quantities are >= 1.
    pub lines: Vec<(ArticleId, u32)>,
}

impl PurchaseOrder {
    pub fn contains_article(&self, article: ArticleId) -> bool {
        self.lines.iter().any(|&(a, _)| a == article)
    }
}

/// A picking order: the batch of purchase orders filled in one iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Order {
    pub purchases: Vec<PurchaseOrder>,
}

impl Order {
    /// Total quantity per article type, summed across purchase orders
    /// (the dense view `o = (m_1, ..., m_N)` restricted to its support).
    pub fn quantities(&self) -> BTreeMap<ArticleId, u32> {
        let mut q = BTreeMap::new();
        for p in &self.purchases {
            for &(article, qty) in &p.lines {
                *q.entry(article).or_insert(0) += qty;
            }
        }
        q
    }

    pub fn total_parcels(&self) -> u64 {
        self.purchases
            .iter()
            .flat_map(|p| p.lines.iter())
            .map(|&(_, q)| q as u64)
            .sum()
    }

    pub fn line_count(&self) -> usize {
        self.purchases.iter().map(|p| p.lines.len()).sum()
    }

    /// Distinct article types across the whole order.
    pub fn article_types(&self) -> BTreeSet<ArticleId> {
        self.purchases
            .iter()
            .flat_map(|p| p.lines.iter().map(|&(a, _)| a))
            .collect()
    }

    /// Index of the first purchase order containing `article`.
    pub fn purchase_of_article(&self, article: ArticleId) -> Option<usize> {
        self.purchases.iter().position(|p| p.contains_article(article))
    }

    /// Line-oriented text form: `article,quantity` per line, purchase
    /// orders separated by one blank line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (ix, p) in self.purchases.iter().enumerate() {
            if ix > 0 {
                out.push('\n');
            }
            for &(article, qty) in &p.lines {
                out.push_str(&format!("{article},{qty}\n"));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut purchases = Vec::new();
        let mut current: Vec<(ArticleId, u32)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                if !current.is_empty() {
                    purchases.push(PurchaseOrder { lines: std::mem::take(&mut current) });
                }
                continue;
            }
            let (a, q) = line.split_once(',').ok_or_else(|| {
                Error::Decode(format!("order line {}: expected `article,quantity`", lineno + 1))
            })?;
            let article: ArticleId = a.trim().parse().map_err(|_| {
                Error::Decode(format!("order line {}: bad article id `{a}`", lineno + 1))
            })?;
            let qty: u32 = q.trim().parse().map_err(|_| {
                Error::Decode(format!("order line {}: bad quantity `{q}`", lineno + 1))
            })?;
            if article == 0 || qty == 0 {
                return Err(Error::Decode(format!(
                    "order line {}: article and quantity must be >= 1",
                    lineno + 1
                )));
            }
            current.push((article, qty));
        }
        if !current.is_empty() {
            purchases.push(PurchaseOrder { lines: current });
        }
        if purchases.is_empty() {
            return Err(Error::Decode("order text contains no lines".into()));
        }
        Ok(Self { purchases })
    }
}

/// How successive stream orders differ from the base order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PerturbationModel {
    /// The same order over and over (experiment 1).
    Recurring,
    /// Each purchase order's first line replaced by a uniform draw
    /// (experiment 2, ~10% churn).
    FixedSlot,
    /// A uniformly chosen line per purchase order replaced
    /// (experiment 3, ~19% churn).
    RandomSlot,
}

impl PerturbationModel {
    pub fn from_experiment(experiment: u8) -> Result<Self> {
        match experiment {
            1 => Ok(Self::Recurring),
            2 => Ok(Self::FixedSlot),
            3 => Ok(Self::RandomSlot),
            other => Err(Error::Config(format!("unknown experiment {other}"))),
        }
    }
}

/// Deterministic sequence of picking orders `o_1, o_2, ...`.
#[derive(Debug, Clone)]
pub struct OrderStream {
    base: Order,
    model: PerturbationModel,
    article_count: u32,
    rng: ChaCha8Rng,
}

/// Generate a picking order of `purchase_count` mutually disjoint purchase
/// orders with `lines_per_purchase` distinct article types each and
/// quantities uniform in `[1, 10]`.
pub fn generate_disjoint_order(
    article_count: u32,
    purchase_count: usize,
    lines_per_purchase: usize,
    seed: u64,
) -> Result<Order> {
    let needed = purchase_count * lines_per_purchase;
    if (article_count as usize) < needed {
        return Err(Error::Config(format!(
            "{needed} distinct article types requested but only {article_count} exist"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = sample(&mut rng, article_count as usize, needed);
    let types: Vec<ArticleId> = picks.iter().map(|ix| ix as u32 + 1).collect();
    let purchases = types
        .chunks(lines_per_purchase)
        .map(|chunk| PurchaseOrder {
            lines: chunk.iter().map(|&a| (a, rng.gen_range(1..=10))).collect(),
        })
        .collect();
    Ok(Order { purchases })
}

/// The paper-scale base order: 20 disjoint purchase orders of 10 types each
/// (200 distinct types overall).
pub fn generate_base_order(article_count: u32, seed: u64) -> Result<Order> {
    generate_disjoint_order(article_count, 20, 10, seed)
}

impl OrderStream {
    pub fn new(base: Order, model: PerturbationModel, article_count: u32, seed: u64) -> Self {
        Self { base, model, article_count, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn base(&self) -> &Order {
        &self.base
    }

    /// Produce the next order of the stream.
    pub fn next_order(&mut self) -> Order {
        match self.model {
            PerturbationModel::Recurring => self.base.clone(),
            PerturbationModel::FixedSlot => self.perturbed(|_, _| 0),
            PerturbationModel::RandomSlot => {
                self.perturbed(|rng, len| rng.gen_range(0..len))
            }
        }
    }

    /// Replace one line per purchase order: the slot picked by `slot_of`,
    /// with a uniform article draw in `[1, N]` (redrawn while it collides
    /// with another type in the same purchase order) and a fresh uniform
    /// quantity in `[1, 10]`.
    fn perturbed(&mut self, slot_of: impl Fn(&mut ChaCha8Rng, usize) -> usize) -> Order {
        let mut order = self.base.clone();
        for purchase in &mut order.purchases {
            if purchase.lines.is_empty() {
                continue;
            }
            let slot = slot_of(&mut self.rng, purchase.lines.len());
            let replacement = loop {
                let draw: ArticleId = self.rng.gen_range(1..=self.article_count);
                let duplicate = purchase
                    .lines
                    .iter()
                    .enumerate()
                    .any(|(ix, &(a, _))| ix != slot && a == draw);
                if !duplicate {
                    break draw;
                }
            };
            let qty = self.rng.gen_range(1..=10);
            purchase.lines[slot] = (replacement, qty);
        }
        order
    }
}

/// Fraction of differing article-type lines between two orders: the size of
/// the multiset symmetric difference of their type lines over the total
/// line count. 0 for identical orders, 1 for disjoint ones.
pub fn order_diff_fraction(a: &Order, b: &Order) -> f64 {
    let mut counts: BTreeMap<ArticleId, i64> = BTreeMap::new();
    let mut total = 0i64;
    for p in &a.purchases {
        for &(article, _) in &p.lines {
            *counts.entry(article).or_insert(0) += 1;
            total += 1;
        }
    }
    for p in &b.purchases {
        for &(article, _) in &p.lines {
            *counts.entry(article).or_insert(0) -= 1;
            total += 1;
        }
    }
    if total == 0 {
        return 0.0;
    }
    let diff: i64 = counts.values().map(|c| c.abs()).sum();
    diff as f64 / total as f64
}
