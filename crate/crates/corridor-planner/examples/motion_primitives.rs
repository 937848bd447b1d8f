//! Closed-form 1D time-optimal motion and bang-coast-bang primitives.
//!
//! ```bash
//! cargo run --example motion_primitives
//! ```

use corridor_planner::kinematics::{min_time_1d, Primitive1D};

fn main() {
    // rest-to-rest over 2 m with v_max 1 m/s, a_max 2 m/s^2
    let prim = min_time_1d(0.0, 2.0, 0.0, 1.0, 2.0);
    println!(
        "phases: accelerate {:.3} s, coast {:.3} s, decelerate {:.3} s",
        prim.tau[0], prim.tau[1], prim.tau[2]
    );
    let (p_coast, v_coast) = prim.coast_start();
    println!(
        "coast entered at p = {:.3} m with v = {:.3} m/s, total {:.3} s",
        p_coast,
        v_coast,
        prim.total_time()
    );

    let (p, v) = prim.end_state();
    println!("end state: p = {p:.6}, v = {v:.6}");

    // a primitive with an asymmetric sign pair overshoots before returning
    let swing = Primitive1D {
        alpha_start: 1.0,
        alpha_end: 1.0,
        p_start: 0.0,
        v_start: -1.0,
        tau: [0.5, 0.2, 0.3],
        a_max: 2.0,
    };
    println!("\nswing-by profile (starts moving backwards):");
    for ep in swing.extreme_points() {
        println!("  extremum at t = {:.3} s, p = {:.4} ({:?})", ep.t, ep.position, ep.kind);
    }
}
