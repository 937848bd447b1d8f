//! Assemble and solve the small trajectory NLP directly, bypassing the
//! planner's repair/flip loops, and print the phase durations.
//!
//! ```bash
//! cargo run --example solve_nlp
//! ```

use corridor_planner::corridors::corridors_for;
use corridor_planner::heuristics::select;
use corridor_planner::nlp::{assemble, initial_guess, solve_nlp};
use corridor_planner::solver::SolveOptions;
use corridor_planner::world::load_scenario;

fn main() {
    let text = include_str!("../fixtures/l_turn.json");
    let base = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let scenario = load_scenario(text, Some(base.as_ref())).expect("fixture parses");

    let seq = corridors_for(&scenario).expect("a cell path exists");
    let sel = select(&seq, &scenario).expect("selection succeeds");
    let problem = assemble(&sel, &seq, &scenario).expect("assembly succeeds");

    let guess = initial_guess(&problem);
    let (x, stats) = solve_nlp(&problem, &guess, &SolveOptions::default()).expect("converges");
    println!(
        "{} iterations in {:.3} ms",
        stats.iterations,
        stats.wall_time * 1e3
    );

    let traj = problem.trajectory(&x);
    println!("t_move = {:.6} s", traj.t_move());
    for (k, piece) in traj.pieces().iter().enumerate() {
        let (px, py) = (&piece.primitive.x, &piece.primitive.y);
        println!(
            "  primitive {k}: x tau = [{:.3}, {:.3}, {:.3}]  y tau = [{:.3}, {:.3}, {:.3}]",
            px.tau[0], px.tau[1], px.tau[2], py.tau[0], py.tau[1], py.tau[2]
        );
    }
}
