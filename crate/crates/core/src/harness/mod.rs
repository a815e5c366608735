//! Experiment orchestration: the silhouette/area experiments, the route
//! comparison study, replay from a manifest, and the invariant suite.
//!
//! Every artifact is plain CSV or JSON with floats rounded to 12
//! significant digits, so a replay from the manifest reproduces the output
//! directory byte for byte.

mod config;

pub use config::{
    ExperimentConfig, Manifest, RunSeeds, Scale, MANIFEST_FILE, MANIFEST_VERSION,
};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::clustering::cluster_orders;
use crate::error::{Error, Result};
use crate::orders::{generate_base_order, generate_disjoint_order, OrderStream, PerturbationModel};
use crate::state::WarehouseState;
use crate::stats::{
    average_trajectories, bonferroni, cliffs_delta, cohens_d, mean_ci, permutation_test,
    RunSummary,
};
use crate::util::{derive_seed, fmt_g12, fnv1a64};
use crate::wms::{
    process_order, run_main_loop, LoopOptions, RouteRecording, RouteSchedule, Trajectory,
};

/// Pointwise mean and standard-deviation bands of one experiment's runs.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedSeries {
    pub silhouette_mean: Vec<f64>,
    pub silhouette_sd: Vec<f64>,
    pub area_mean: Vec<f64>,
    pub area_sd: Vec<f64>,
}

/// Permutation-test comparison of run-level improvements between two
/// experiment tags.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseComparison {
    pub experiment_a: u8,
    pub experiment_b: u8,
    pub p: f64,
    pub p_bonferroni: f64,
    /// `None` when the pooled standard deviation degenerates to zero.
    pub cohens_d: Option<f64>,
    pub cliffs_delta: f64,
}

/// One route evaluation row of the route study.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteStudyRow {
    pub run: u32,
    pub iteration: u32,
    pub stops: usize,
    /// Held-Karp optimum; `None` when the stop count exceeds the oracle.
    pub optimal: Option<i64>,
    pub clustered: i64,
    pub ratio: Option<f64>,
}

/// Aggregated route study results.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteStudyReport {
    pub rows: Vec<RouteStudyRow>,
    /// Statistics over final-iteration obtained/optimal ratios.
    pub mean_ratio: f64,
    pub sd_ratio: f64,
    pub ci_ratio: (f64, f64),
    pub max_ratio: f64,
    pub mean_initial_stops: f64,
    pub mean_final_stops: f64,
    /// Mean fractional drop of the obtained route length between the first
    /// and final iteration.
    pub mean_length_reduction: f64,
}

/// Everything a harness invocation produced, with the manifest that
/// replays it.
#[derive(Debug, Clone)]
pub struct ExperimentArtifacts {
    pub out_dir: PathBuf,
    pub summaries: Vec<RunSummary>,
    pub averaged: BTreeMap<u8, AveragedSeries>,
    pub pairwise: Vec<PairwiseComparison>,
    pub route_study: Option<RouteStudyReport>,
    pub manifest: Manifest,
}

struct OutputWriter {
    dir: PathBuf,
    digests: BTreeMap<String, String>,
}

impl OutputWriter {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), digests: BTreeMap::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), contents)?;
        self.digests
            .insert(name.to_string(), format!("{:016x}", fnv1a64(contents.as_bytes())));
        Ok(())
    }
}

fn salt(experiment: u8, run: u32, lane: u64) -> u64 {
    ((experiment as u64) << 48) | ((run as u64) << 8) | lane
}

fn run_seeds(config: &ExperimentConfig, experiment: u8, run: u32) -> RunSeeds {
    RunSeeds {
        experiment,
        run,
        seed_state: derive_seed(config.seed_state, salt(experiment, run, 0)),
        seed_orders: derive_seed(config.seed_orders, salt(experiment, run, 1)),
        seed_stream: derive_seed(config.seed_orders, salt(experiment, run, 2)),
        seed_kmeans: derive_seed(config.seed_kmeans, salt(experiment, run, 3)),
    }
}

fn run_one_trajectory(config: &ExperimentConfig, seeds: &RunSeeds) -> Result<Trajectory> {
    let state_config = config.scale.state_config(seeds.seed_state);
    let mut state = WarehouseState::init_random(&state_config)?;
    let article_count = state.article_count();
    let base = generate_base_order(article_count, seeds.seed_orders)?;
    let model = PerturbationModel::from_experiment(seeds.experiment)?;
    let mut stream = OrderStream::new(base, model, article_count, seeds.seed_stream);
    let options = LoopOptions {
        k: config.k,
        kmeans_seed: seeds.seed_kmeans,
        ..Default::default()
    };
    run_main_loop(&mut state, &mut stream, config.iterations, &options)
}

/// Run the configured experiments (and optionally the route study), write
/// all artifacts plus the replay manifest into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentArtifacts> {
    config.validate()?;
    let mut writer = OutputWriter::new(out_dir)?;

    let mut experiments = config.experiments.clone();
    experiments.sort_unstable();
    experiments.dedup();

    let jobs: Vec<RunSeeds> = experiments
        .iter()
        .flat_map(|&e| (0..config.runs).map(move |r| (e, r)))
        .map(|(e, r)| run_seeds(config, e, r))
        .collect();

    let trajectories: Vec<Result<Trajectory>> = jobs
        .par_iter()
        .map(|seeds| run_one_trajectory(config, seeds))
        .collect();

    let mut summaries = Vec::new();
    let mut by_experiment: BTreeMap<u8, Vec<Trajectory>> = BTreeMap::new();
    let single_tag = experiments.len() == 1;
    for (seeds, trajectory) in jobs.iter().zip(trajectories) {
        let trajectory = trajectory?;
        let name = if single_tag {
            format!("trajectory_run{}.csv", seeds.run)
        } else {
            format!("exp{}_trajectory_run{}.csv", seeds.experiment, seeds.run)
        };
        writer.write(&name, &trajectory.to_csv())?;
        let silhouettes = trajectory.silhouettes();
        summaries.push(RunSummary {
            experiment: seeds.experiment,
            run: seeds.run,
            seed_state: seeds.seed_state,
            seed_orders: seeds.seed_orders,
            initial_score: *silhouettes.first().unwrap_or(&f64::NAN),
            final_score: *silhouettes.last().unwrap_or(&f64::NAN),
        });
        by_experiment.entry(seeds.experiment).or_default().push(trajectory);
    }

    let mut averaged = BTreeMap::new();
    for (&experiment, runs) in &by_experiment {
        let silhouettes: Vec<Vec<f64>> = runs.iter().map(|t| t.silhouettes()).collect();
        let areas: Vec<Vec<f64>> = runs.iter().map(|t| t.areas()).collect();
        let (silhouette_mean, silhouette_sd) = average_trajectories(&silhouettes)?;
        let (area_mean, area_sd) = average_trajectories(&areas)?;
        averaged.insert(
            experiment,
            AveragedSeries { silhouette_mean, silhouette_sd, area_mean, area_sd },
        );
    }

    let pairwise = pairwise_stats(config, &experiments, &summaries)?;

    if !summaries.is_empty() {
        writer.write("summary.csv", &summary_csv(&summaries))?;
        writer.write("averaged.csv", &averaged_csv(&averaged))?;
    }

    let route_study = if config.route_study {
        let report = route_study(config, &mut writer)?;
        Some(report)
    } else {
        None
    };

    writer.write(
        "stats.txt",
        &stats_report(config, &summaries, &pairwise, route_study.as_ref()),
    )?;

    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        config: config.clone(),
        run_seeds: jobs,
        outputs: writer.digests.clone(),
    };
    std::fs::write(out_dir.join(MANIFEST_FILE), manifest.to_json())?;

    Ok(ExperimentArtifacts {
        out_dir: out_dir.to_path_buf(),
        summaries,
        averaged,
        pairwise,
        route_study,
        manifest,
    })
}

fn pairwise_stats(
    config: &ExperimentConfig,
    experiments: &[u8],
    summaries: &[RunSummary],
) -> Result<Vec<PairwiseComparison>> {
    let mut improvements: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
    for s in summaries {
        improvements.entry(s.experiment).or_default().push(s.improvement());
    }
    let mut pairs = Vec::new();
    for (ix, &a) in experiments.iter().enumerate() {
        for &b in &experiments[ix + 1..] {
            pairs.push((a, b));
        }
    }
    let comparisons = pairs.len() as u32;
    let mut out = Vec::new();
    for (a, b) in pairs {
        let group_a = &improvements[&a];
        let group_b = &improvements[&b];
        if group_a.len() < 2 || group_b.len() < 2 {
            continue;
        }
        let seed = derive_seed(config.seed_stats, salt(a, b as u32, 4));
        let p = permutation_test(group_a, group_b, config.resamples, seed)?;
        out.push(PairwiseComparison {
            experiment_a: a,
            experiment_b: b,
            p,
            p_bonferroni: bonferroni(p, comparisons),
            cohens_d: cohens_d(group_a, group_b).ok(),
            cliffs_delta: cliffs_delta(group_a, group_b)?,
        });
    }
    Ok(out)
}

fn summary_csv(summaries: &[RunSummary]) -> String {
    let mut out = String::from("experiment,run,seed_state,seed_orders,initial,final,delta\n");
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.experiment,
            s.run,
            s.seed_state,
            s.seed_orders,
            fmt_g12(s.initial_score),
            fmt_g12(s.final_score),
            fmt_g12(s.improvement()),
        ));
    }
    out
}

fn averaged_csv(averaged: &BTreeMap<u8, AveragedSeries>) -> String {
    let mut out = String::from("experiment,n,silhouette_mean,silhouette_sd,area_mean,area_sd\n");
    for (experiment, series) in averaged {
        for n in 0..series.silhouette_mean.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                experiment,
                n + 1,
                fmt_g12(series.silhouette_mean[n]),
                fmt_g12(series.silhouette_sd[n]),
                fmt_g12(series.area_mean[n]),
                fmt_g12(series.area_sd[n]),
            ));
        }
    }
    out
}

fn stats_report(
    config: &ExperimentConfig,
    summaries: &[RunSummary],
    pairwise: &[PairwiseComparison],
    route_study: Option<&RouteStudyReport>,
) -> String {
    let mut out = String::new();
    let mut improvements: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
    for s in summaries {
        improvements.entry(s.experiment).or_default().push(s.improvement());
    }
    if !improvements.is_empty() {
        out.push_str("silhouette improvement (delta = final - initial)\n");
        for (experiment, deltas) in &improvements {
            match mean_ci(deltas, 0.95) {
                Ok((mean, lo, hi)) => out.push_str(&format!(
                    "experiment {experiment}: runs={}, delta mean={}, 95% CI [{}, {}]\n",
                    deltas.len(),
                    fmt_g12(mean),
                    fmt_g12(lo),
                    fmt_g12(hi),
                )),
                Err(_) => out.push_str(&format!(
                    "experiment {experiment}: runs={}, delta={}\n",
                    deltas.len(),
                    fmt_g12(deltas[0]),
                )),
            }
        }
    }
    if !pairwise.is_empty() {
        out.push_str(&format!(
            "\npairwise comparisons (two-sided permutation test, {} resamples, Bonferroni x{})\n",
            config.resamples,
            pairwise.len(),
        ));
        for c in pairwise {
            let d = c.cohens_d.map(fmt_g12).unwrap_or_else(|| "undefined".into());
            out.push_str(&format!(
                "exp {} vs exp {}: p={}, p_bonferroni={}, cohens_d={}, cliffs_delta={}\n",
                c.experiment_a,
                c.experiment_b,
                fmt_g12(c.p),
                fmt_g12(c.p_bonferroni),
                d,
                fmt_g12(c.cliffs_delta),
            ));
        }
    }
    if let Some(report) = route_study {
        out.push_str(&format!(
            "\nroute study ({} runs, {} iterations, {}-product recurring order)\n",
            config.runs, config.route_iterations, config.route_order_products,
        ));
        out.push_str(&format!(
            "final obtained/optimal ratio: mean={}, sd={}, 95% CI [{}, {}], max={}\n",
            fmt_g12(report.mean_ratio),
            fmt_g12(report.sd_ratio),
            fmt_g12(report.ci_ratio.0),
            fmt_g12(report.ci_ratio.1),
            fmt_g12(report.max_ratio),
        ));
        out.push_str(&format!(
            "stops: mean {} initially, {} at the final iteration\n",
            fmt_g12(report.mean_initial_stops),
            fmt_g12(report.mean_final_stops),
        ));
        out.push_str(&format!(
            "mean route length reduction first->final: {}%\n",
            fmt_g12(report.mean_length_reduction * 100.0),
        ));
    }
    out
}

fn route_study(config: &ExperimentConfig, writer: &mut OutputWriter) -> Result<RouteStudyReport> {
    let jobs: Vec<RunSeeds> = (0..config.runs)
        .map(|r| run_seeds(config, 0, r)) // experiment tag 0 = route study
        .collect();
    let trajectories: Vec<Result<Trajectory>> = jobs
        .par_iter()
        .map(|seeds| {
            let state_config = config.scale.state_config(seeds.seed_state);
            let mut state = WarehouseState::init_random(&state_config)?;
            let article_count = state.article_count();
            // One product per purchase order: the customer order is
            // clustered directly by product positions.
            let base = generate_disjoint_order(
                article_count,
                config.route_order_products,
                1,
                seeds.seed_orders,
            )?;
            let mut stream =
                OrderStream::new(base, PerturbationModel::Recurring, article_count, seeds.seed_stream);
            let options = LoopOptions {
                k: config.k.min(config.route_order_products),
                kmeans_seed: seeds.seed_kmeans,
                routes: Some(RouteRecording {
                    schedule: RouteSchedule::FirstAndLast,
                    route_clusters: config.k,
                    exhaustive_limit: config.exhaustive_limit,
                    segment_capacity: config.segment_capacity,
                    seed: derive_seed(seeds.seed_kmeans, 5),
                }),
                ..Default::default()
            };
            run_main_loop(&mut state, &mut stream, config.route_iterations, &options)
        })
        .collect();

    let mut rows = Vec::new();
    let mut final_ratios = Vec::new();
    let mut initial_stops = Vec::new();
    let mut final_stops = Vec::new();
    let mut reductions = Vec::new();
    for (seeds, trajectory) in jobs.iter().zip(trajectories) {
        let trajectory = trajectory?;
        writer.write(
            &format!("route_trajectory_run{}.csv", seeds.run),
            &trajectory.to_csv(),
        )?;
        let first = trajectory.records.first().expect("iterations >= 1");
        let last = trajectory.records.last().expect("iterations >= 1");
        for record in [first, last] {
            let clustered = record
                .route_len_clustered
                .expect("route recording scheduled on first and last iteration");
            let ratio = record.route_len_exact.map(|optimal| {
                if optimal == 0 {
                    1.0
                } else {
                    clustered as f64 / optimal as f64
                }
            });
            rows.push(RouteStudyRow {
                run: seeds.run,
                iteration: record.iteration,
                stops: record.stop_count,
                optimal: record.route_len_exact,
                clustered,
                ratio,
            });
        }
        if let Some(r) = rows.last().and_then(|r| r.ratio) {
            final_ratios.push(r);
        }
        initial_stops.push(first.stop_count as f64);
        final_stops.push(last.stop_count as f64);
        let len_first = first.route_len_clustered.unwrap_or(0);
        let len_last = last.route_len_clustered.unwrap_or(0);
        if len_first > 0 {
            reductions.push((len_first - len_last) as f64 / len_first as f64);
        }
    }

    let (mean_ratio, ci_lo, ci_hi) = match mean_ci(&final_ratios, 0.95) {
        Ok(v) => v,
        Err(_) => {
            let m = final_ratios.first().copied().unwrap_or(f64::NAN);
            (m, m, m)
        }
    };
    let sd_ratio = if final_ratios.len() > 1 {
        let m = mean_ratio;
        (final_ratios.iter().map(|r| (r - m).powi(2)).sum::<f64>()
            / (final_ratios.len() - 1) as f64)
            .sqrt()
    } else {
        0.0
    };
    let max_ratio = final_ratios.iter().copied().fold(f64::NAN, f64::max);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;

    let report = RouteStudyReport {
        mean_ratio,
        sd_ratio,
        ci_ratio: (ci_lo, ci_hi),
        max_ratio,
        mean_initial_stops: mean(&initial_stops),
        mean_final_stops: mean(&final_stops),
        mean_length_reduction: mean(&reductions),
        rows,
    };

    writer.write("route_study.csv", &route_study_csv(&report))?;
    Ok(report)
}

fn route_study_csv(report: &RouteStudyReport) -> String {
    let mut out = String::from("run,iteration,stops,optimal,clustered,ratio\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.run,
            row.iteration,
            row.stops,
            row.optimal.map(|v| v.to_string()).unwrap_or_default(),
            row.clustered,
            row.ratio.map(fmt_g12).unwrap_or_default(),
        ));
    }
    out
}

/// How many files a replay verified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub files_verified: usize,
}

/// Re-run the configuration recorded in a manifest and verify that every
/// output file reproduces its recorded digest.
pub fn replay(manifest_path: &Path, out_dir: &Path) -> Result<ReplayReport> {
    let manifest = Manifest::load(manifest_path)?;
    let artifacts = run_experiment(&manifest.config, out_dir)?;
    let mut mismatches = Vec::new();
    for (file, digest) in &manifest.outputs {
        match artifacts.manifest.outputs.get(file) {
            Some(new_digest) if new_digest == digest => {}
            Some(_) => mismatches.push(format!("{file}: digest differs")),
            None => mismatches.push(format!("{file}: missing from replay")),
        }
    }
    for file in artifacts.manifest.outputs.keys() {
        if !manifest.outputs.contains_key(file) {
            mismatches.push(format!("{file}: not in original manifest"));
        }
    }
    if !mismatches.is_empty() {
        return Err(Error::ReplayMismatch(mismatches.join("; ")));
    }
    Ok(ReplayReport { files_verified: manifest.outputs.len() })
}

/// Counters from one invariant-suite pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvariantReport {
    pub iterations: u32,
    pub relocations: u64,
    pub blocked: u64,
    pub picked_parcels: u64,
}

/// Drive a randomized trajectory checking every structural invariant each
/// iteration: state validity, pick-set partition, covariance positive
/// semidefiniteness, silhouette bounds, the relocation guard and exact
/// parcel conservation.
pub fn run_invariant_suite(
    config: &ExperimentConfig,
    experiment: u8,
    iterations: u32,
    seed: u64,
) -> Result<InvariantReport> {
    let state_config = config.scale.state_config(derive_seed(seed, 10));
    let mut state = WarehouseState::init_random(&state_config)?;
    let article_count = state.article_count();
    let base = generate_base_order(article_count, derive_seed(seed, 11))?;
    let model = PerturbationModel::from_experiment(experiment)?;
    let mut stream = OrderStream::new(base, model, article_count, derive_seed(seed, 12));

    let fail = |msg: String| Error::Config(format!("invariant violated: {msg}"));
    let mut report = InvariantReport::default();
    for n in 1..=iterations {
        let order = stream.next_order();
        let clusters = cluster_orders(&state, &order, config.k, derive_seed(seed, 13 + n as u64))?;

        // Partition: the per-cluster pick sets are disjoint and cover the
        // order's picking nodes exactly.
        let pick_map = crate::wms::compute_pick_map(&state, &order)?;
        let mut seen = std::collections::BTreeSet::new();
        for picks in &clusters.pick_sets {
            for node in &picks.pick_nodes {
                if !seen.insert(*node) {
                    return Err(fail(format!("node {node} in two clusters")));
                }
                if !pick_map.w.contains_key(node) {
                    return Err(fail(format!("cluster node {node} not in the pick map")));
                }
            }
        }
        if seen.len() != pick_map.w.len() {
            return Err(fail("cluster pick sets do not cover the pick map".into()));
        }

        for cov in &clusters.covariances {
            let (lo, _) = cov.eigenvalues();
            if lo < -1e-9 {
                return Err(fail(format!("covariance eigenvalue {lo} < -1e-9")));
            }
        }

        if let Ok(s) = clusters.silhouette_score() {
            if !(-1.0 - 1e-9..=1.0 + 1e-9).contains(&s) {
                return Err(fail(format!("silhouette {s} outside [-1, 1]")));
            }
        }

        let stock_before = state.total_stock();
        let outcome = process_order(&mut state, &order, &clusters)?;
        let stock_after = state.total_stock();

        let delta = stock_before as i128 - stock_after as i128;
        if delta != outcome.parcels_removed as i128 - outcome.parcels_added as i128 {
            return Err(fail(format!(
                "stock delta {delta} != removed {} - added {}",
                outcome.parcels_removed, outcome.parcels_added
            )));
        }
        if outcome.parcels_removed + outcome.unfilled != order.total_parcels() {
            return Err(fail("removed + unfilled != order size".into()));
        }

        for event in &outcome.relocations {
            let before = (event.from.i as f64 - event.center.0).powi(2)
                + (event.from.j as f64 - event.center.1).powi(2);
            let after = (event.to.i as f64 - event.center.0).powi(2)
                + (event.to.j as f64 - event.center.1).powi(2);
            if after >= before {
                return Err(fail(format!(
                    "relocation of article {} did not approach its center",
                    event.article
                )));
            }
        }

        state.validate()?;

        report.iterations = n;
        report.relocations += outcome.relocations.len() as u64;
        report.blocked += outcome.blocked.len() as u64;
        report.picked_parcels += outcome.parcels_removed;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_config() -> ExperimentConfig {
        let mut config = ExperimentConfig::default();
        config.runs = 3;
        config.iterations = 8;
        config
    }

    #[test]
    fn experiment_writes_expected_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let config = quick_config();
        let artifacts = run_experiment(&config, dir.path()).unwrap();
        assert_eq!(artifacts.summaries.len(), 3);
        for name in ["trajectory_run0.csv", "trajectory_run1.csv", "summary.csv", "averaged.csv", "stats.txt"] {
            assert!(dir.path().join(name).exists(), "{name} missing");
        }
        assert!(dir.path().join(MANIFEST_FILE).exists());
        assert_eq!(artifacts.averaged[&1].silhouette_mean.len(), 8);
        assert!(artifacts.pairwise.is_empty());
    }

    #[test]
    fn multi_experiment_run_produces_pairwise_stats() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = quick_config();
        config.experiments = vec![1, 3];
        let artifacts = run_experiment(&config, dir.path()).unwrap();
        assert_eq!(artifacts.pairwise.len(), 1);
        let pair = &artifacts.pairwise[0];
        assert_eq!((pair.experiment_a, pair.experiment_b), (1, 3));
        assert!(pair.p > 0.0 && pair.p <= 1.0);
        assert!(dir.path().join("exp1_trajectory_run0.csv").exists());
        assert!(dir.path().join("exp3_trajectory_run2.csv").exists());
    }

    #[test]
    fn replay_reproduces_byte_identical_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("original");
        let config = quick_config();
        run_experiment(&config, &out).unwrap();
        let replay_dir = dir.path().join("replayed");
        let report = replay(&out.join(MANIFEST_FILE), &replay_dir).unwrap();
        assert!(report.files_verified >= 5);
        for entry in std::fs::read_dir(&out).unwrap() {
            let entry = entry.unwrap();
            let name = entry.file_name();
            let original = std::fs::read(entry.path()).unwrap();
            let replayed = std::fs::read(replay_dir.join(&name)).unwrap();
            assert_eq!(original, replayed, "{name:?} differs");
        }
    }

    #[test]
    fn tampered_manifest_seed_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("original");
        let config = quick_config();
        run_experiment(&config, &out).unwrap();
        let manifest_path = out.join(MANIFEST_FILE);
        let mut manifest = Manifest::load(&manifest_path).unwrap();
        manifest.config.seed_state ^= 1;
        std::fs::write(&manifest_path, manifest.to_json()).unwrap();
        let replay_dir = dir.path().join("replayed");
        assert!(matches!(
            replay(&manifest_path, &replay_dir),
            Err(Error::ReplayMismatch(_))
        ));
    }

    #[test]
    fn route_study_rows_and_aggregates() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = ExperimentConfig::default();
        config.experiments = vec![];
        config.route_study = true;
        config.runs = 2;
        config.route_iterations = 40;
        let artifacts = run_experiment(&config, dir.path()).unwrap();
        let report = artifacts.route_study.unwrap();
        assert_eq!(report.rows.len(), 4); // first + final per run
        for row in &report.rows {
            assert!(row.optimal.is_some());
            let ratio = row.ratio.unwrap();
            assert!(ratio >= 1.0 - 1e-12, "ratio {ratio} below 1");
        }
        assert!(report.mean_initial_stops >= report.mean_final_stops);
        assert!(dir.path().join("route_study.csv").exists());
        assert!(dir.path().join("route_trajectory_run0.csv").exists());
    }

    #[test]
    fn invariant_suite_passes_on_all_models() {
        let config = ExperimentConfig::default();
        for experiment in 1..=3 {
            let report = run_invariant_suite(&config, experiment, 20, 99).unwrap();
            assert_eq!(report.iterations, 20);
            assert!(report.picked_parcels > 0);
        }
    }
}
