use wareflow_core::harness::{run_experiment, ExperimentConfig, Scale};

fn main() {
    let arg = std::env::args().nth(1).unwrap_or_default();
    let mut config = ExperimentConfig::default();
    match arg.as_str() {
        "small" => {
            config.experiments = vec![1, 2, 3];
            config.runs = 10;
            config.iterations = 100;
        }
        "area" => {
            config.experiments = vec![1, 2, 3];
            config.runs = 10;
            config.iterations = 200;
        }
        "large" => {
            config.scale = Scale::Large;
            config.experiments = vec![1, 2, 3];
            config.runs = 5;
            config.iterations = 100;
        }
        "route" => {
            config.experiments = vec![];
            config.route_study = true;
            config.runs = 10;
            config.route_iterations = 300;
        }
        other => panic!("unknown probe {other}"),
    }
    let t0 = std::time::Instant::now();
    let dir = std::env::temp_dir().join(format!("wareflow_probe_{arg}"));
    let _ = std::fs::remove_dir_all(&dir);
    let artifacts = run_experiment(&config, &dir).unwrap();
    println!("elapsed: {:.1?}s", t0.elapsed().as_secs_f64());

    for (e, series) in &artifacts.averaged {
        let sil = &series.silhouette_mean;
        let area = &series.area_mean;
        println!(
            "exp {e}: sil[0]={:.3} sil[19]={:.3} sil[last]={:.3}  area[0]={:.3} area[19]={:.3} area[last]={:.3}",
            sil[0], sil[19.min(sil.len()-1)], sil[sil.len()-1],
            area[0], area[19.min(area.len()-1)], area[area.len()-1],
        );
    }
    let mut by_exp = std::collections::BTreeMap::<u8, Vec<f64>>::new();
    for s in &artifacts.summaries {
        by_exp.entry(s.experiment).or_default().push(s.improvement());
    }
    for (e, deltas) in &by_exp {
        let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
        println!("exp {e}: delta mean {mean:.3}  deltas {deltas:.2?}");
    }
    for p in &artifacts.pairwise {
        println!(
            "exp {} vs {}: p={:.5} p_bonf={:.5} d={:?} delta={:.2}",
            p.experiment_a, p.experiment_b, p.p, p.p_bonferroni, p.cohens_d, p.cliffs_delta
        );
    }
    if let Some(r) = &artifacts.route_study {
        println!(
            "route: mean_ratio={:.3} sd={:.3} max={:.3} stops {:.1}->{:.1} reduction {:.1}%",
            r.mean_ratio, r.sd_ratio, r.max_ratio,
            r.mean_initial_stops, r.mean_final_stops,
            r.mean_length_reduction * 100.0
        );
        for row in &r.rows {
            println!("  {row:?}");
        }
    }
}
