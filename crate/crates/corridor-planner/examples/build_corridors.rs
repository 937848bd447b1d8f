//! Build the rectangular free-space corridor sequence for a map and
//! print each corridor with its overlap region.
//!
//! ```bash
//! cargo run --example build_corridors
//! ```

use corridor_planner::corridors::corridors_for;
use corridor_planner::world::load_scenario;

fn main() {
    let text = include_str!("../fixtures/l_turn.json");
    let base = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let scenario = load_scenario(text, Some(base.as_ref())).expect("fixture parses");

    let seq = corridors_for(&scenario).expect("a cell path exists");
    println!("{} corridors", seq.len());
    for (i, r) in seq.rects().iter().enumerate() {
        println!(
            "  corridor {i}: x [{:.2}, {:.2}]  y [{:.2}, {:.2}]",
            r.min.x, r.max.x, r.min.y, r.max.y
        );
        if i > 0 {
            let o = seq.overlap(i);
            println!(
                "    overlap with {}: x [{:.2}, {:.2}]  y [{:.2}, {:.2}]",
                i - 1,
                o.min.x,
                o.max.x,
                o.min.y,
                o.max.y
            );
        }
    }
}
