//! Waypoint and acceleration-sign selection for a corridor sequence.
//!
//! ```bash
//! cargo run --example heuristic_selection
//! ```

use corridor_planner::corridors::corridors_for;
use corridor_planner::heuristics::select;
use corridor_planner::world::load_scenario;

fn main() {
    let text = include_str!("../fixtures/l_turn.json");
    let base = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let scenario = load_scenario(text, Some(base.as_ref())).expect("fixture parses");

    let seq = corridors_for(&scenario).expect("a cell path exists");
    let sel = select(&seq, &scenario).expect("selection succeeds");

    println!("{} primitives", sel.num_primitives());
    for (k, (p, s)) in sel.waypoints.iter().zip(&sel.signs).enumerate() {
        let movable = match &sel.movable[k] {
            Some(_) => " (movable)",
            None => "",
        };
        println!(
            "  waypoint {k}: p = ({:.2}, {:.2})  signs = ({:+.0}, {:+.0}){movable}",
            p.x, p.y, s.x, s.y
        );
    }
    println!("free axis at start: {:?}", sel.free_axis_start);
    println!("free axis at goal:  {:?}", sel.free_axis_end);
}
