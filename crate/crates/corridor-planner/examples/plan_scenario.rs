//! Plan a scenario end to end and print the trajectory summary.
//!
//! ```bash
//! cargo run --example plan_scenario
//! ```

use corridor_planner::planner::plan;
use corridor_planner::world::load_scenario;

fn main() {
    let text = include_str!("../fixtures/l_turn.json");
    let base = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let scenario = load_scenario(text, Some(base.as_ref())).expect("fixture parses");

    let outcome = plan(&scenario);
    let report = &outcome.report;
    println!("status:      {:?}", report.status);
    println!("corridors:   {}", report.n_corridors);
    println!("t_move:      {:.6} s", report.t_move);
    println!("solver time: {:.3} ms", report.t_solver * 1e3);

    let traj = outcome.trajectory.expect("the L-turn fixture solves");
    println!("\n  t      px     py     vx     vy");
    for s in traj.sample(5.0) {
        println!(
            "{:5.2}  {:5.2}  {:5.2}  {:5.2}  {:5.2}",
            s.t, s.p.x, s.p.y, s.v.x, s.v.y
        );
    }
}
