use std::collections::BTreeSet;

use wareflow_core::clustering::cluster_orders;
use wareflow_core::orders::{generate_base_order, OrderStream, PerturbationModel};
use wareflow_core::state::StateConfig;
use wareflow_core::wms::process_order;
use wareflow_core::WarehouseState;

fn main() {
    // Distribution of iteration-1 center triangle areas.
    let mut areas = Vec::new();
    for seed in 0..30u64 {
        let state = WarehouseState::init_random(&StateConfig::small(seed)).unwrap();
        let order = generate_base_order(890, seed + 1000).unwrap();
        let model = cluster_orders(&state, &order, 3, seed + 2000).unwrap();
        areas.push(model.center_triangle_area().unwrap());
        if seed < 5 {
            println!(
                "seed {seed}: centers {:?} area {:.3} sizes {:?}",
                model
                    .centers
                    .iter()
                    .map(|c| (format!("{:.2}", c.0), format!("{:.2}", c.1)))
                    .collect::<Vec<_>>(),
                model.center_triangle_area().unwrap(),
                model.pick_sets.iter().map(|p| p.node_count()).collect::<Vec<_>>(),
            );
        }
    }
    areas.sort_by(f64::total_cmp);
    println!(
        "initial area: min {:.3} median {:.3} mean {:.3} max {:.3}",
        areas[0],
        areas[areas.len() / 2],
        areas.iter().sum::<f64>() / areas.len() as f64,
        areas[areas.len() - 1]
    );

    // Relocation composition over a 100-iteration run per experiment.
    for experiment in [1u8, 2, 3] {
        let pm = match experiment {
            1 => PerturbationModel::Recurring,
            2 => PerturbationModel::FixedSlot,
            _ => PerturbationModel::RandomSlot,
        };
        let mut state = WarehouseState::init_random(&StateConfig::small(7)).unwrap();
        let base = generate_base_order(890, 7).unwrap();
        let core: BTreeSet<u32> = base.article_types().into_iter().collect();
        let mut stream = OrderStream::new(base, pm, 890, 7);
        let mut core_moves = 0u64;
        let mut noise_moves = 0u64;
        let mut blocked = 0u64;
        let mut unfilled = 0u64;
        let mut checkpoints = Vec::new();
        for n in 1..=100u32 {
            let order = stream.next_order();
            let model = cluster_orders(&state, &order, 3, 7 + n as u64).unwrap();
            let outcome = process_order(&mut state, &order, &model).unwrap();
            for e in &outcome.relocations {
                if core.contains(&e.article) {
                    core_moves += 1;
                } else {
                    noise_moves += 1;
                }
            }
            blocked += outcome.blocked.len() as u64;
            unfilled += outcome.unfilled;
            if [1, 5, 10, 20, 50, 100].contains(&n) {
                let sil = model.silhouette_score().unwrap_or(f64::NAN);
                let area = model.center_triangle_area().unwrap();
                checkpoints.push(format!("n={n}: sil {sil:.3} area {area:.2}"));
            }
        }
        println!(
            "exp {experiment}: core_moves {core_moves} noise_moves {noise_moves} blocked {blocked} unfilled {unfilled}"
        );
        for c in checkpoints {
            println!("   {c}");
        }
    }
}
