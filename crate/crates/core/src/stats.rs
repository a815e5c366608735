//! Run-level statistics: t-based confidence intervals, permutation tests,
//! effect sizes and trajectory averaging.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Outcome of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub experiment: u8,
    pub run: u32,
    pub seed_state: u64,
    pub seed_orders: u64,
    pub initial_score: f64,
    pub final_score: f64,
}

impl RunSummary {
    /// Final minus initial silhouette score.
    pub fn improvement(&self) -> f64 {
        self.final_score - self.initial_score
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_variance(values: &[f64], m: f64) -> f64 {
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64
}

/// Student-t confidence interval on the mean.
pub fn mean_ci(values: &[f64], confidence: f64) -> Result<(f64, f64, f64)> {
    if values.len() < 2 {
        return Err(Error::Stats("confidence interval needs >= 2 values".into()));
    }
    if !(0.0..1.0).contains(&confidence) {
        return Err(Error::Stats(format!("confidence {confidence} outside (0, 1)")));
    }
    let n = values.len() as f64;
    let m = mean(values);
    let sd = sample_variance(values, m).sqrt();
    if sd == 0.0 {
        return Ok((m, m, m));
    }
    let t = StudentsT::new(0.0, 1.0, n - 1.0)
        .map_err(|e| Error::Stats(e.to_string()))?
        .inverse_cdf(0.5 + confidence / 2.0);
    let half = t * sd / n.sqrt();
    Ok((m, m - half, m + half))
}

/// Two-sided permutation test on the difference of group means.
///
/// When the number of distinct label assignments is at most `resamples`
/// the test enumerates them exactly; otherwise it Monte-Carlo samples
/// `resamples` shuffles with `(hits + 1) / (resamples + 1)` smoothing.
/// Deterministic per seed; resamples draw from per-index RNG streams.
pub fn permutation_test(group_a: &[f64], group_b: &[f64], resamples: u32, seed: u64) -> Result<f64> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(Error::Stats("permutation test needs nonempty groups".into()));
    }
    let observed = (mean(group_a) - mean(group_b)).abs();
    let pooled: Vec<f64> = group_a.iter().chain(group_b.iter()).copied().collect();
    let n_a = group_a.len();

    if let Some(total) = choose(pooled.len() as u64, n_a as u64) {
        if total <= resamples as u64 {
            let hits = enumerate_assignments(&pooled, n_a, observed);
            return Ok(hits as f64 / total as f64);
        }
    }

    let hits: u32 = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64 + 1);
            let mut values = pooled.clone();
            values.shuffle(&mut rng);
            let diff = (mean(&values[..n_a]) - mean(&values[n_a..])).abs();
            u32::from(diff >= observed - 1e-12)
        })
        .sum();
    Ok((hits as f64 + 1.0) / (resamples as f64 + 1.0))
}

/// Bonferroni correction: multiply by the comparison count, capped at 1.
pub fn bonferroni(p: f64, comparisons: u32) -> f64 {
    (p * comparisons as f64).min(1.0)
}

fn choose(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for step in 0..k {
        acc = acc.checked_mul(n - step)?;
        acc /= step + 1;
    }
    Some(acc)
}

/// Count assignments whose |mean difference| reaches the observed one,
/// over all ways to label `n_a` of the pooled values as group A.
fn enumerate_assignments(pooled: &[f64], n_a: usize, observed: f64) -> u64 {
    let n = pooled.len();
    let total_sum: f64 = pooled.iter().sum();
    let mut indices: Vec<usize> = (0..n_a).collect();
    let mut hits = 0u64;
    loop {
        let sum_a: f64 = indices.iter().map(|&ix| pooled[ix]).sum();
        let mean_a = sum_a / n_a as f64;
        let mean_b = (total_sum - sum_a) / (n - n_a) as f64;
        if (mean_a - mean_b).abs() >= observed - 1e-12 {
            hits += 1;
        }
        // Next combination in lexicographic order.
        let mut pos = n_a;
        while pos > 0 {
            pos -= 1;
            if indices[pos] != pos + n - n_a {
                indices[pos] += 1;
                for later in pos + 1..n_a {
                    indices[later] = indices[later - 1] + 1;
                }
                break;
            }
            if pos == 0 {
                return hits;
            }
        }
        if n_a == 0 {
            return hits;
        }
    }
}

/// Cohen's d with the pooled sample standard deviation.
pub fn cohens_d(group_a: &[f64], group_b: &[f64]) -> Result<f64> {
    if group_a.len() < 2 || group_b.len() < 2 {
        return Err(Error::Stats("cohens_d needs >= 2 values per group".into()));
    }
    let (n_a, n_b) = (group_a.len() as f64, group_b.len() as f64);
    let (m_a, m_b) = (mean(group_a), mean(group_b));
    let pooled_var = ((n_a - 1.0) * sample_variance(group_a, m_a)
        + (n_b - 1.0) * sample_variance(group_b, m_b))
        / (n_a + n_b - 2.0);
    if pooled_var == 0.0 {
        return Err(Error::Stats("zero pooled standard deviation".into()));
    }
    Ok((m_a - m_b) / pooled_var.sqrt())
}

/// Cliff's delta: `(#{a > b} - #{a < b}) / (|A| * |B|)`.
pub fn cliffs_delta(group_a: &[f64], group_b: &[f64]) -> Result<f64> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(Error::Stats("cliffs_delta needs nonempty groups".into()));
    }
    let mut greater = 0i64;
    let mut less = 0i64;
    for &a in group_a {
        for &b in group_b {
            if a > b {
                greater += 1;
            } else if a < b {
                less += 1;
            }
        }
    }
    Ok((greater - less) as f64 / (group_a.len() * group_b.len()) as f64)
}

/// Pointwise mean and population standard deviation across equal-length
/// series.
pub fn average_trajectories(runs: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let Some(first) = runs.first() else {
        return Err(Error::Stats("no runs to average".into()));
    };
    let len = first.len();
    if runs.iter().any(|r| r.len() != len) {
        return Err(Error::Stats("trajectory lengths differ".into()));
    }
    let n = runs.len() as f64;
    let mut means = Vec::with_capacity(len);
    let mut sds = Vec::with_capacity(len);
    for t in 0..len {
        let m = runs.iter().map(|r| r[t]).sum::<f64>() / n;
        let var = runs.iter().map(|r| (r[t] - m).powi(2)).sum::<f64>() / n;
        means.push(m);
        sds.push(var.sqrt());
    }
    Ok((means, sds))
}
