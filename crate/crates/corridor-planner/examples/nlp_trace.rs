use corridor_planner::bench::{generate_scenarios, BenchmarkConfig};
use corridor_planner::planner::plan;
use corridor_planner::world::{load_scenario, serialize_scenario};

fn main() {
    let idx: usize = std::env::args().nth(1).unwrap().parse().unwrap();
    let cfg = BenchmarkConfig {
        n: 100,
        seed: 2024,
        ..BenchmarkConfig::default()
    };
    let scs = generate_scenarios(&cfg).unwrap();
    let json = serialize_scenario(&scs[idx]);
    let reloaded = load_scenario(&json, None).unwrap();
    let json2 = serialize_scenario(&reloaded);
    println!("roundtrip identical: {}", json == json2);
    let a = plan(&scs[idx]);
    let b = plan(&reloaded);
    println!("direct:   {:?} t_move {:.4}", a.report.status, a.report.t_move);
    println!("reloaded: {:?} t_move {:.4}", b.report.status, b.report.t_move);
}
