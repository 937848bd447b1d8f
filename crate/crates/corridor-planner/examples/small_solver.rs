//! Use the bundled interior-point solver on a tiny constrained problem:
//! minimize (x-2)^2 + (y-1)^2 subject to x + y = 2 and x >= 0.5.
//!
//! ```bash
//! cargo run --example small_solver
//! ```

use corridor_planner::solver::{solve, Entry, Problem, SolveOptions};

struct Toy;

impl Problem for Toy {
    fn num_vars(&self) -> usize {
        2
    }
    fn num_eq(&self) -> usize {
        1
    }
    fn num_ineq(&self) -> usize {
        1
    }
    fn objective(&self, x: &[f64]) -> f64 {
        (x[0] - 2.0).powi(2) + (x[1] - 1.0).powi(2)
    }
    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        grad[0] = 2.0 * (x[0] - 2.0);
        grad[1] = 2.0 * (x[1] - 1.0);
    }
    fn eq_values(&self, x: &[f64], out: &mut [f64]) {
        out[0] = x[0] + x[1] - 2.0;
    }
    fn ineq_values(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 0.5 - x[0]; // h(x) <= 0
    }
    fn eq_jacobian(&self, _x: &[f64], out: &mut Vec<Entry>) {
        out.push((0, 0, 1.0));
        out.push((0, 1, 1.0));
    }
    fn ineq_jacobian(&self, _x: &[f64], out: &mut Vec<Entry>) {
        out.push((0, 0, -1.0));
    }
    fn lagrangian_hessian(
        &self,
        _x: &[f64],
        obj_scale: f64,
        _lam_eq: &[f64],
        _lam_ineq: &[f64],
        out: &mut Vec<Entry>,
    ) {
        out.push((0, 0, 2.0 * obj_scale));
        out.push((1, 1, 2.0 * obj_scale));
    }
}

fn main() {
    let sol = solve(&Toy, &[0.0, 0.0], &SolveOptions::default()).expect("converges");
    println!("x = ({:.6}, {:.6})", sol.x[0], sol.x[1]);
    println!("objective = {:.6}", sol.objective);
    println!("iterations = {}", sol.iterations);
    // analytic optimum on the constraint line: (1.5, 0.5)
}
