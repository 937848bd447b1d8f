//! A scenario where the planner's sign-flip refinement pays off: the
//! first solution coasts through a waypoint, and flipping that
//! waypoint's acceleration signs shortens the trajectory by ~18%.
//!
//! ```bash
//! cargo run --example flip_improvement
//! ```

use corridor_planner::planner::plan;
use corridor_planner::world::load_scenario;

fn main() {
    let text = include_str!("../fixtures/flip.json");
    let scenario = load_scenario(text, None).expect("fixture parses");

    let outcome = plan(&scenario);
    let report = &outcome.report;
    println!("status:        {:?}", report.status);
    println!("flip rounds:   {}", report.n_flip_rounds);
    if let Some(pre) = report.t_move_pre_flip {
        println!("t_move before: {:.6} s", pre);
        println!("t_move after:  {:.6} s", report.t_move);
        println!(
            "improvement:   {:.2} %",
            (pre - report.t_move) / pre * 100.0
        );
    } else {
        println!("no flip occurred; t_move = {:.6} s", report.t_move);
    }
}
