use corridor_planner::bench::{generate_scenarios, run_bench, BenchmarkConfig};
use corridor_planner::world::serialize_scenario;

fn main() {
    let cfg = BenchmarkConfig {
        n: 100,
        seed: 2024,
        ..BenchmarkConfig::default()
    };
    let results = run_bench(&cfg).unwrap();
    let mut solved = 0;
    for r in &results.records {
        let eps = r.eps_move.unwrap_or(f64::NAN);
        let tp = r.t_solver_pmp.unwrap_or(f64::NAN);
        if r.t_move_pmp.is_some() {
            solved += 1;
        }
        if eps.abs() > 0.02 || tp > 0.15 || r.t_move_pmp.is_none() {
            let scs = generate_scenarios(&cfg).unwrap();
            std::fs::write(
                format!("/tmp/sfail_{}.json", r.index),
                serialize_scenario(&scs[r.index]),
            )
            .unwrap();
            println!(
                "instance {:3}: {:?} eps {:+.4} pmp {:.4}s ocp {:.4}s t_pmp {:.3}s t_ocp {:.3}s",
                r.index,
                r.status,
                eps,
                r.t_move_pmp.unwrap_or(f64::NAN),
                r.t_move_ocp.unwrap_or(f64::NAN),
                tp,
                r.t_solver_ocp.unwrap_or(f64::NAN),
            );
        }
    }
    let mean = |f: &dyn Fn(&corridor_planner::bench::InstanceRecord) -> Option<f64>| {
        let v: Vec<f64> = results.records.iter().filter_map(f).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    println!(
        "solved {solved} | mean eps {:+.4} | mean t_pmp {:.4}s | mean t_ocp {:.4}s",
        mean(&|r| r.eps_move),
        mean(&|r| r.t_solver_pmp),
        mean(&|r| r.t_solver_ocp),
    );
}
