use corridor_planner::corridors::corridors_for;
use corridor_planner::heuristics::select;
use corridor_planner::nlp::{assemble, initial_guess, solve_nlp};
use corridor_planner::solver::SolveOptions;
use corridor_planner::world::load_scenario;

fn main() {
    for path in std::env::args().skip(1) {
        let sc = load_scenario(&std::fs::read_to_string(&path).unwrap(), None).unwrap();
        let seq = corridors_for(&sc).unwrap();
        let sel = select(&seq, &sc).unwrap();
        let n = sel.num_primitives();
        print!("{path}: n={n} |");
        // enumerate per-axis sign flips at interior waypoints 1..n
        for mask in 0..(1u32 << (2 * (n - 1))) {
            let mut v = sel.clone();
            for k in 1..n {
                let b = 2 * (k - 1);
                if mask & (1 << b) != 0 {
                    v.signs[k].x = -v.signs[k].x;
                }
                if mask & (1 << (b + 1)) != 0 {
                    v.signs[k].y = -v.signs[k].y;
                }
            }
            let problem = assemble(&v, &seq, &sc).unwrap();
            match solve_nlp(&problem, &initial_guess(&problem), &SolveOptions::default()) {
                Ok((x, stats)) => print!(
                    " mask {mask}: OK {} iters t_move {:.4} |",
                    stats.iterations,
                    problem.trajectory(&x).t_move()
                ),
                Err(_) => print!(" mask {mask}: fail |"),
            }
        }
        println!();
    }
}
