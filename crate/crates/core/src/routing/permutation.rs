//! Lexicographic permutation indexing and permutation-space segmentation.
//!
//! The exhaustive route solver works on ranks instead of materialized
//! permutations: the space of undirected open routes over `n` stops is the
//! set of permutations with `first < last` endpoint (exactly `n!/2` of
//! them), enumerated in lexicographic order. A segmentation plan splits any
//! rank space into bounded batches for data-parallel evaluation.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n!` as `u64`; `None` beyond 20!.
pub fn factorial_u64(n: usize) -> Option<u64> {
    let mut acc: u64 = 1;
    for f in 2..=n as u64 {
        acc = acc.checked_mul(f)?;
    }
    Some(acc)
}

pub fn factorial_big(n: u64) -> BigUint {
    let mut acc = BigUint::from(1u32);
    for f in 2..=n {
        acc *= f;
    }
    acc
}

/// Number of undirected open routes over `n` stops: `n!/2` (1 for n <= 1).
pub fn half_route_count(n: usize) -> Option<u64> {
    if n <= 1 {
        return Some(1);
    }
    Some(factorial_u64(n)? / 2)
}

/// Lexicographic index ranges covering a permutation space in bounded
/// batches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationPlan {
    pub permutation_space: u64,
    pub batch_capacity: u64,
    /// `(start_rank, count)` pairs partitioning `[0, permutation_space)`.
    pub ranges: Vec<(u64, u64)>,
}

/// The permutation count the reference GPU kernel handled in one launch;
/// larger spaces have to be segmented.
pub const DEFAULT_SEGMENT_CAPACITY: u64 = 2_903_040;

pub fn plan_segmentation(permutation_space: u64, batch_capacity: u64) -> Result<SegmentationPlan> {
    if batch_capacity == 0 {
        return Err(Error::Config("segment capacity must be >= 1".into()));
    }
    let mut ranges = Vec::new();
    let mut start = 0;
    while start < permutation_space {
        let count = batch_capacity.min(permutation_space - start);
        ranges.push((start, count));
        start += count;
    }
    Ok(SegmentationPlan { permutation_space, batch_capacity, ranges })
}

/// The `rank`-th permutation of `0..n` in lexicographic order
/// (factorial-base unranking).
pub fn unrank_permutation(rank: u64, n: usize) -> Vec<usize> {
    debug_assert!(rank < factorial_u64(n).expect("n too large"));
    let mut available: Vec<usize> = (0..n).collect();
    let mut perm = Vec::with_capacity(n);
    let mut rest = rank;
    for pos in 0..n {
        let block = factorial_u64(n - 1 - pos).expect("n too large");
        let digit = (rest / block) as usize;
        rest %= block;
        perm.push(available.remove(digit));
    }
    perm
}

/// The `rank`-th permutation of `0..n` (n >= 2), in lexicographic order,
/// among those with `perm[0] < perm[n-1]`. Each undirected open route has
/// exactly one such representative, so ranks cover `[0, n!/2)`.
pub fn unrank_open_route(rank: u64, n: usize) -> Vec<usize> {
    debug_assert!(n >= 2);
    debug_assert!(rank < half_route_count(n).expect("n too large"));
    let mut available: Vec<usize> = (0..n).collect();
    let mut perm: Vec<usize> = Vec::with_capacity(n);
    let mut rest = rank;
    let mut first = usize::MAX;
    for pos in 0..n {
        if pos + 1 == n {
            perm.push(available[0]);
            break;
        }
        // Count completions for each candidate: permutations of the
        // remaining elements whose final element exceeds the route's first.
        let tail_block = factorial_u64(n - 2 - pos).expect("n too large");
        let mut chosen = None;
        for (slot, &candidate) in available.iter().enumerate() {
            let anchor = if pos == 0 { candidate } else { first };
            let greater = available
                .iter()
                .filter(|&&x| x != candidate && x > anchor)
                .count() as u64;
            let count = greater * tail_block;
            if rest < count {
                chosen = Some(slot);
                break;
            }
            rest -= count;
        }
        let slot = chosen.expect("rank within the constrained space");
        let value = available.remove(slot);
        if pos == 0 {
            first = value;
        }
        perm.push(value);
    }
    perm
}

/// Theorem-style route-count comparison for a stop set split into clusters:
/// the cluster-decomposed evaluation count `m! * 2^(m-1) + (n_1! + ... +
/// n_m!)/2` against the brute-force count `n!/2`. Exact big integers.
pub fn route_count_reduction(n: u64, partition: &[u64]) -> Result<(BigUint, BigUint)> {
    if partition.is_empty() {
        return Err(Error::Config("partition must name at least one cluster".into()));
    }
    let total: u64 = partition.iter().sum();
    if total != n {
        return Err(Error::Config(format!(
            "partition sums to {total}, expected {n}"
        )));
    }
    let m = partition.len() as u64;
    let stitching = factorial_big(m) * BigUint::from(2u32).pow(m as u32 - 1);
    let per_cluster: BigUint = partition.iter().map(|&nj| factorial_big(nj)).sum();
    let reduced = stitching + per_cluster / 2u32;
    let brute = factorial_big(n) / 2u32;
    Ok((reduced, brute))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorials() {
        assert_eq!(factorial_u64(0), Some(1));
        assert_eq!(factorial_u64(10), Some(3_628_800));
        assert_eq!(factorial_u64(20), Some(2_432_902_008_176_640_000));
        assert_eq!(factorial_u64(21), None);
        assert_eq!(factorial_big(25).to_string(), "15511210043330985984000000");
    }

    #[test]
    fn segmentation_examples() {
        let plan = plan_segmentation(10, 4).unwrap();
        assert_eq!(plan.ranges, vec![(0, 4), (4, 4), (8, 2)]);
        let plan = plan_segmentation(3, 100).unwrap();
        assert_eq!(plan.ranges, vec![(0, 3)]);
        let plan = plan_segmentation(0, 5).unwrap();
        assert!(plan.ranges.is_empty());
        assert!(plan_segmentation(10, 0).is_err());
    }

    #[test]
    fn ten_stop_space_fits_one_default_batch() {
        let space = half_route_count(10).unwrap();
        assert_eq!(space, 1_814_400);
        let plan = plan_segmentation(space, DEFAULT_SEGMENT_CAPACITY).unwrap();
        assert_eq!(plan.ranges.len(), 1);
    }

    #[test]
    fn full_unranking_is_lexicographic_and_complete() {
        let n = 4;
        let total = factorial_u64(n).unwrap();
        let perms: Vec<Vec<usize>> = (0..total).map(|r| unrank_permutation(r, n)).collect();
        assert_eq!(perms[0], vec![0, 1, 2, 3]);
        assert_eq!(perms[1], vec![0, 1, 3, 2]);
        assert_eq!(perms[23], vec![3, 2, 1, 0]);
        for w in perms.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn open_route_unranking_covers_the_half_space() {
        for n in 2..=6usize {
            let total = half_route_count(n).unwrap();
            let perms: Vec<Vec<usize>> = (0..total).map(|r| unrank_open_route(r, n)).collect();
            for p in &perms {
                assert!(p[0] < p[n - 1], "representative constraint in {p:?}");
            }
            for w in perms.windows(2) {
                assert!(w[0] < w[1], "lexicographic order: {:?} then {:?}", w[0], w[1]);
            }
            // Together with their reversals they cover every permutation.
            let mut all: Vec<Vec<usize>> = perms
                .iter()
                .flat_map(|p| {
                    let mut r = p.clone();
                    r.reverse();
                    [p.clone(), r]
                })
                .collect();
            all.sort();
            all.dedup();
            assert_eq!(all.len() as u64, factorial_u64(n).unwrap());
        }
    }

    #[test]
    fn three_stop_open_routes() {
        assert_eq!(unrank_open_route(0, 3), vec![0, 1, 2]);
        assert_eq!(unrank_open_route(1, 3), vec![0, 2, 1]);
        assert_eq!(unrank_open_route(2, 3), vec![1, 0, 2]);
    }

    #[test]
    fn theorem_counts() {
        let cases: [(u64, &[u64], u64); 4] = [
            (12, &[6, 6], 724),
            (12, &[4, 4, 4], 60),
            (12, &[3, 3, 3, 3], 204),
            (15, &[5, 5, 5], 204),
        ];
        for (n, partition, expected) in cases {
            let (reduced, brute) = route_count_reduction(n, partition).unwrap();
            assert_eq!(reduced, BigUint::from(expected));
            assert_eq!(brute, factorial_big(n) / 2u32);
        }
    }

    #[test]
    fn single_cluster_count_is_brute_plus_one_stitch() {
        for n in [2u64, 5, 9, 12] {
            let (reduced, brute) = route_count_reduction(n, &[n]).unwrap();
            assert_eq!(reduced, BigUint::from(1u32) + brute.clone());
            assert_eq!(brute, factorial_big(n) / 2u32);
        }
    }

    #[test]
    fn partition_must_sum() {
        assert!(route_count_reduction(10, &[3, 3]).is_err());
        assert!(route_count_reduction(10, &[]).is_err());
    }
}
