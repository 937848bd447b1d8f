//! Round-trip a planned trajectory through the CSV format and validate
//! it against the map and vehicle limits.
//!
//! ```bash
//! cargo run --example validate_trajectory
//! ```

use corridor_planner::bench::{parse_trajectory_csv, validate_samples};
use corridor_planner::kinematics::trajectory_csv;
use corridor_planner::planner::plan;
use corridor_planner::world::load_scenario;

fn main() {
    let text = include_str!("../fixtures/l_turn.json");
    let base = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let scenario = load_scenario(text, Some(base.as_ref())).expect("fixture parses");

    let outcome = plan(&scenario);
    let traj = outcome.trajectory.expect("the L-turn fixture solves");
    let csv = trajectory_csv(&traj, 100.0);
    println!("{} sampled rows", csv.lines().count() - 1);

    let mut samples = parse_trajectory_csv(&csv).expect("own CSV parses");
    let verdict = validate_samples(&samples, &scenario.grid, &scenario.vehicle);
    println!("clean trajectory -> all checks pass: {}", verdict.all_ok());

    // corrupt one row and watch the bound check trip
    let mid = samples.len() / 2;
    samples[mid].v.x = scenario.vehicle.v_max + 0.5;
    let verdict = validate_samples(&samples, &scenario.grid, &scenario.vehicle);
    println!("corrupted row {mid} -> bounds ok: {}", verdict.bounds_ok);
    println!("first violation: {}", verdict.first_violation.unwrap());
}
