use corridor_planner::planner::plan;
use corridor_planner::world::load_scenario;
use std::time::Instant;

fn main() {
    for path in std::env::args().skip(1) {
        let sc = load_scenario(&std::fs::read_to_string(&path).unwrap(), None).unwrap();
        let t0 = Instant::now();
        let out = plan(&sc);
        eprintln!(
            "{path}: {:?} t_move {:.4} total {:.3}s",
            out.report.status,
            out.report.t_move,
            t0.elapsed().as_secs_f64()
        );
    }
}
