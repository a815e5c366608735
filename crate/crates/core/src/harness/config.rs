//! Experiment configuration, TOML loading and the replay manifest.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridDims;
use crate::routing::{DEFAULT_EXHAUSTIVE_LIMIT, DEFAULT_SEGMENT_CAPACITY};
use crate::state::{MaxBalance, StateConfig};

/// Warehouse scale presets plus a free-form variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// 10x10x10 nodes, 890 articles, 11 empty racks.
    Small,
    /// 100x100x10 nodes, 89 000 articles, 1100 empty racks.
    Large,
    Custom {
        dims: GridDims,
        article_count: u32,
        max_balance: u32,
        empty_racks: u32,
    },
}

impl Scale {
    pub fn state_config(&self, rng_seed: u64) -> StateConfig {
        match self {
            Scale::Small => StateConfig::small(rng_seed),
            Scale::Large => StateConfig::large(rng_seed),
            Scale::Custom { dims, article_count, max_balance, empty_racks } => StateConfig {
                dims: *dims,
                article_count: *article_count,
                max_balance: MaxBalance::Uniform(*max_balance),
                empty_rack_count: *empty_racks,
                rng_seed,
            },
        }
    }

    pub fn article_count(&self) -> u32 {
        match self {
            Scale::Small => 890,
            Scale::Large => 89_000,
            Scale::Custom { article_count, .. } => *article_count,
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Scale::Small),
            "large" => Ok(Scale::Large),
            other => Err(Error::Config(format!(
                "unknown scale `{other}` (expected small or large)"
            ))),
        }
    }
}

fn default_iterations() -> u32 {
    100
}
fn default_runs() -> u32 {
    10
}
fn default_k() -> usize {
    3
}
fn default_seed() -> u64 {
    1
}
fn default_route_products() -> usize {
    10
}
fn default_route_iterations() -> u32 {
    300
}
fn default_exhaustive_limit() -> usize {
    DEFAULT_EXHAUSTIVE_LIMIT
}
fn default_segment_capacity() -> u64 {
    DEFAULT_SEGMENT_CAPACITY
}
fn default_resamples() -> u32 {
    10_000
}
fn default_scale() -> Scale {
    Scale::Small
}
fn default_experiments() -> Vec<u8> {
    vec![1]
}

/// Everything a run of the harness depends on. Serialized verbatim into the
/// manifest so a replay reproduces the artifact byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_scale")]
    pub scale: Scale,
    /// Experiment tags to run (1 = recurring, 2 = fixed slot, 3 = random
    /// slot). May be empty when only the route study runs.
    #[serde(default = "default_experiments")]
    pub experiments: Vec<u8>,
    #[serde(default = "default_iterations")]
    pub iterations: u32,
    #[serde(default = "default_runs")]
    pub runs: u32,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_seed")]
    pub seed_state: u64,
    #[serde(default = "default_seed")]
    pub seed_orders: u64,
    #[serde(default = "default_seed")]
    pub seed_kmeans: u64,
    #[serde(default = "default_seed")]
    pub seed_stats: u64,
    #[serde(default)]
    pub route_study: bool,
    /// Products in the recurring route-study order.
    #[serde(default = "default_route_products")]
    pub route_order_products: usize,
    #[serde(default = "default_route_iterations")]
    pub route_iterations: u32,
    #[serde(default = "default_exhaustive_limit")]
    pub exhaustive_limit: usize,
    #[serde(default = "default_segment_capacity")]
    pub segment_capacity: u64,
    #[serde(default = "default_resamples")]
    pub resamples: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults are total")
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.experiments.is_empty() && !self.route_study {
            return Err(Error::Config(
                "nothing to do: no experiments and no route study".into(),
            ));
        }
        for &e in &self.experiments {
            if !(1..=3).contains(&e) {
                return Err(Error::Config(format!("unknown experiment {e}")));
            }
        }
        if self.iterations == 0 || (self.route_study && self.route_iterations == 0) {
            return Err(Error::Config("iterations must be >= 1".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be >= 1".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        self.scale.state_config(0).validate()?;
        if self.scale.article_count() < 200 && !self.experiments.is_empty() {
            return Err(Error::Config(
                "experiments need at least 200 article types".into(),
            ));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// Seeds actually used by one run, recorded for transparency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub experiment: u8,
    pub run: u32,
    pub seed_state: u64,
    pub seed_orders: u64,
    pub seed_stream: u64,
    pub seed_kmeans: u64,
}

/// The replay manifest: configuration, derived seeds and output digests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub config: ExperimentConfig,
    pub run_seeds: Vec<RunSeeds>,
    /// File name -> FNV-1a64 digest (hex) of its bytes.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let manifest: Manifest =
            serde_json::from_str(text).map_err(|e| Error::Decode(format!("manifest: {e}")))?;
        if manifest.format_version != MANIFEST_VERSION {
            return Err(Error::Decode(format!(
                "manifest format {} unsupported (expected {MANIFEST_VERSION})",
                manifest.format_version
            )));
        }
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
