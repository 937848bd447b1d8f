use corridor_planner::baseline::{TranscribedOcp, DEFAULT_GRID};
use corridor_planner::corridors::corridors_for;
use corridor_planner::geom::Vec2;
use corridor_planner::solver::{solve, SolveOptions};
use corridor_planner::world::{load_map, Scenario, Vehicle};

fn main() {
    let sc = Scenario {
        grid: load_map("cells 2 6 0.5\n......\n......\n").unwrap(),
        vehicle: Vehicle { width: 0.5, length: 0.5, v_max: 1.0, a_max: 2.0 },
        p0: Vec2::new(0.4, 0.5),
        pn: Vec2::new(2.6, 0.5),
        v0: Vec2::new(0.0, 0.0),
    };
    let seq = corridors_for(&sc).unwrap();
    let ocp = TranscribedOcp::new(&seq, &sc, DEFAULT_GRID);
    let guess = ocp.initial_guess(&seq, &sc);
    let opts = SolveOptions { trace: true, ..SolveOptions::default() };
    match solve(&ocp, &guess, &opts) {
        Ok(sol) => println!("ok obj {} iters {}", sol.objective, sol.iterations),
        Err(e) => println!("err {e}"),
    }
}
