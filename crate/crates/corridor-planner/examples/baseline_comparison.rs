//! Compare the primitive-based planner against the direct-transcription
//! multiple-shooting baseline on the same corridor sequence.
//!
//! ```bash
//! cargo run --example baseline_comparison
//! ```

use corridor_planner::baseline::{intersample_violation_count, solve_baseline, DEFAULT_GRID};
use corridor_planner::corridors::corridors_for;
use corridor_planner::planner::plan;
use corridor_planner::world::load_scenario;

fn main() {
    let text = include_str!("../fixtures/l_turn.json");
    let base = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let scenario = load_scenario(text, Some(base.as_ref())).expect("fixture parses");

    let pmp = plan(&scenario);
    let seq = corridors_for(&scenario).expect("a cell path exists");
    let (ocp_traj, ocp) =
        solve_baseline(&seq, &scenario, DEFAULT_GRID).expect("baseline converges");

    println!("PMP:      t_move {:.6} s  ({:.3} ms solve)", pmp.report.t_move, pmp.report.t_solver * 1e3);
    println!("baseline: t_move {:.6} s  ({:.3} ms solve)", ocp.t_move, ocp.t_solver * 1e3);
    let eps = (pmp.report.t_move - ocp.t_move) / ocp.t_move;
    println!("relative moving-time error: {:+.4} %", eps * 100.0);

    // the baseline only constrains its grid points, so it may cut corners
    let violations = intersample_violation_count(&ocp_traj, &seq, &scenario, 100.0);
    println!("baseline inter-sample corridor violations at 100 Hz: {violations}");
}
