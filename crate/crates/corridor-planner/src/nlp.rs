//! Assembly and solution of the primitive-parameter optimization problem.
//!
//! Given waypoints and acceleration signs, the remaining unknowns are the
//! per-primitive start velocities and the three phase durations per axis,
//! plus the free-direction acceleration multipliers at both trajectory ends
//! (with slacked magnitude bounds) and the offsets of released waypoints.
//! All derivatives are analytic, including the exact Lagrangian Hessian.
//!
//! Variable layout for `n` primitives (movable count `m`):
//! ```text
//!   [0, 2n)        v_k per axis            (2k + axis)
//!   [2n, 5n)       tau_x phases            (2n + 3k + i)
//!   [5n, 8n)       tau_y phases            (5n + 3k + i)
//!   8n, 8n+1       alpha_0^F, alpha_n^F
//!   8n+2, 8n+3     slack magnitudes s_a0, s_an
//!   [8n+4, 8n+4+2m) delta offsets of movable waypoints, increasing k
//! ```

use std::time::Instant;

use crate::corridors::CorridorSequence;
use crate::error::{Error, Result};
use crate::geom::{Axis, Rect, Vec2};
use crate::heuristics::PrimitiveSelection;
use crate::kinematics::{Primitive1D, Primitive2D, Trajectory};
use crate::solver::{self, Entry, Problem, SolveOptions};
use crate::world::Scenario;

/// Weight of the quadratic slack penalty on the free-direction bounds.
pub const SLACK_WEIGHT: f64 = 1e3;

/// Which parabolic phase of a primitive a repair constraint targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepairPhase {
    First,
    Third,
}

/// Corridor-box constraint on the analytic extremum of one parabolic phase,
/// added between solves when a velocity zero-crossing exits the corridor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Repair {
    pub k: usize,
    pub axis: Axis,
    pub phase: RepairPhase,
}

#[derive(Debug, Clone)]
pub struct NlpProblem {
    n: usize,
    a_max: f64,
    v_max: f64,
    v0_bar: Vec2,
    waypoints: Vec<Vec2>,
    signs: Vec<Vec2>,
    free_start: Axis,
    free_end: Axis,
    /// Admissible box for the vehicle center inside each corridor.
    boxes: Vec<Rect>,
    /// Base variable index of each waypoint's offset, if released.
    delta_var: Vec<Option<usize>>,
    delta_bounds: Vec<Option<Rect>>,
    repairs: Vec<Repair>,
    num_vars: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub wall_time: f64,
}

impl NlpProblem {
    fn iv(&self, k: usize, ax: Axis) -> usize {
        2 * k + ax.index()
    }
    fn itau(&self, ax: Axis, k: usize, i: usize) -> usize {
        2 * self.n + 3 * self.n * ax.index() + 3 * k + i
    }
    fn ia0(&self) -> usize {
        8 * self.n
    }
    fn ian(&self) -> usize {
        8 * self.n + 1
    }
    fn is0(&self) -> usize {
        8 * self.n + 2
    }
    fn isn(&self) -> usize {
        8 * self.n + 3
    }

    pub fn num_primitives(&self) -> usize {
        self.n
    }

    /// First-phase acceleration multiplier of primitive `k` on `ax`, with
    /// the variable index when it is the released end multiplier.
    fn alpha_start(&self, x: &[f64], k: usize, ax: Axis) -> (f64, Option<usize>) {
        if k == 0 && ax == self.free_start {
            (x[self.ia0()], Some(self.ia0()))
        } else {
            (self.signs[k].axis(ax), None)
        }
    }
    fn alpha_end(&self, x: &[f64], k: usize, ax: Axis) -> (f64, Option<usize>) {
        if k == self.n - 1 && ax == self.free_end {
            (x[self.ian()], Some(self.ian()))
        } else {
            (self.signs[k + 1].axis(ax), None)
        }
    }
    fn delta(&self, x: &[f64], k: usize, ax: Axis) -> (f64, Option<usize>) {
        match self.delta_var[k] {
            Some(base) => (x[base + ax.index()], Some(base + ax.index())),
            None => (0.0, None),
        }
    }

    pub fn add_extremum_constraints(&mut self, repairs: &[Repair]) {
        self.repairs.extend_from_slice(repairs);
    }

    pub fn repairs(&self) -> &[Repair] {
        &self.repairs
    }

    /// Waypoints shifted by the solved offsets.
    pub fn waypoint_positions(&self, x: &[f64]) -> Vec<Vec2> {
        (0..=self.n)
            .map(|k| {
                Vec2::new(
                    self.waypoints[k].x + self.delta(x, k, Axis::X).0,
                    self.waypoints[k].y + self.delta(x, k, Axis::Y).0,
                )
            })
            .collect()
    }

    /// Admissible center box of corridor `k`.
    pub fn corridor_box(&self, k: usize) -> &Rect {
        &self.boxes[k]
    }

    /// Extract the bang-coast-bang trajectory from a solution vector. The
    /// y-axis phase durations are rescaled by at most the solver tolerance
    /// so both axes share an exactly equal primitive duration.
    pub fn trajectory(&self, x: &[f64]) -> Trajectory {
        let points = self.waypoint_positions(x);
        let mut prims = Vec::with_capacity(self.n);
        for k in 0..self.n {
            let mut axes = [Primitive1D::rest(0.0, self.a_max), Primitive1D::rest(0.0, self.a_max)];
            for ax in Axis::BOTH {
                let tau = [
                    x[self.itau(ax, k, 0)].max(0.0),
                    x[self.itau(ax, k, 1)].max(0.0),
                    x[self.itau(ax, k, 2)].max(0.0),
                ];
                axes[ax.index()] = Primitive1D {
                    alpha_start: self.alpha_start(x, k, ax).0,
                    alpha_end: self.alpha_end(x, k, ax).0,
                    p_start: points[k].axis(ax),
                    v_start: x[self.iv(k, ax)],
                    tau,
                    a_max: self.a_max,
                };
            }
            let tx: f64 = axes[0].tau.iter().sum();
            let ty: f64 = axes[1].tau.iter().sum();
            if ty > 1e-12 {
                let scale = tx / ty;
                for t in axes[1].tau.iter_mut() {
                    *t *= scale;
                }
            } else {
                axes[1].tau = [0.0, tx, 0.0];
            }
            let [px, py] = axes;
            prims.push(Primitive2D { x: px, y: py });
        }
        Trajectory::from_primitives(prims)
    }

    pub fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "primitives": self.n,
            "variables": self.num_vars(),
            "equalities": self.num_eq(),
            "inequalities": self.num_ineq(),
            "movable": self.delta_var.iter().filter(|d| d.is_some()).count(),
            "repairs": self.repairs.len(),
            "free_axis_start": format!("{:?}", self.free_start),
            "free_axis_end": format!("{:?}", self.free_end),
        })
    }
}

/// Build the problem for a selection over a corridor sequence.
pub fn assemble(
    selection: &PrimitiveSelection,
    sequence: &CorridorSequence,
    scenario: &Scenario,
) -> Result<NlpProblem> {
    let n = selection.num_primitives();
    assert_eq!(n, sequence.len());
    let half = scenario.vehicle.half_extents();
    let boxes: Vec<Rect> = sequence.rects().iter().map(|r| r.shrink(half)).collect();

    // every fixed waypoint must already satisfy its corridors' boxes
    for k in 0..=n {
        let p = selection.waypoints[k];
        let owners: &[usize] = if k == 0 {
            &[0]
        } else if k == n {
            &[n - 1]
        } else {
            &[k - 1, k]
        };
        for &c in owners {
            if !boxes[c].contains(p, 1e-9) {
                return Err(Error::SelectionMismatch { index: k });
            }
        }
    }

    let mut delta_var = vec![None; n + 1];
    let mut next = 8 * n + 4;
    for k in 0..=n {
        if selection.movable[k].is_some() {
            delta_var[k] = Some(next);
            next += 2;
        }
    }
    Ok(NlpProblem {
        n,
        a_max: scenario.vehicle.a_max,
        v_max: scenario.vehicle.v_max,
        v0_bar: scenario.v0,
        waypoints: selection.waypoints.clone(),
        signs: selection.signs.clone(),
        free_start: selection.free_axis_start,
        free_end: selection.free_axis_end,
        boxes,
        delta_var,
        delta_bounds: selection.movable.clone(),
        repairs: Vec::new(),
        num_vars: next,
    })
}

/// Deterministic starting point: phase ratios (1, 7, 0.2) scaled per
/// primitive, velocities solving the position chaining exactly, released
/// multipliers at their heuristic signs, slacks and offsets at zero.
pub fn initial_guess(problem: &NlpProblem) -> Vec<f64> {
    let p = problem;
    let mut x = vec![0.0; p.num_vars];
    x[p.ia0()] = p.signs[0].axis(p.free_start);
    x[p.ian()] = p.signs[p.n].axis(p.free_end);
    for k in 0..p.n {
        let dp = p.waypoints[k + 1] - p.waypoints[k];
        // sweep the time scale for the first value whose implied velocities
        // are admissible; otherwise settle for the least-bad scale
        let implied_v = |tprime: f64, ax: Axis| -> f64 {
            let a_s = p.signs[k].axis(ax) * p.a_max;
            let a_e = p.signs[k + 1].axis(ax) * p.a_max;
            let (t0, t1, t2) = (tprime, 7.0 * tprime, 0.2 * tprime);
            (dp.axis(ax) - a_s * (0.5 * t0 * t0 + t0 * (t1 + t2)) - 0.5 * a_e * t2 * t2)
                / (8.2 * tprime)
        };
        let mut tprime = 0.06;
        let mut best = (f64::INFINITY, tprime);
        let mut candidate = 0.06;
        for _ in 0..60 {
            let worst = Axis::BOTH
                .iter()
                .map(|&ax| implied_v(candidate, ax).abs())
                .fold(0.0f64, f64::max);
            if worst < best.0 {
                best = (worst, candidate);
            }
            if worst <= 0.95 * p.v_max {
                break;
            }
            candidate *= 1.3;
        }
        tprime = best.1;
        let (t0, t1, t2) = (tprime, 7.0 * tprime, 0.2 * tprime);
        for ax in Axis::BOTH {
            x[p.itau(ax, k, 0)] = t0;
            x[p.itau(ax, k, 1)] = t1;
            x[p.itau(ax, k, 2)] = t2;
            let a_s = p.signs[k].axis(ax) * p.a_max;
            let a_e = p.signs[k + 1].axis(ax) * p.a_max;
            x[p.iv(k, ax)] = (dp.axis(ax)
                - a_s * (0.5 * t0 * t0 + t0 * (t1 + t2))
                - 0.5 * a_e * t2 * t2)
                / (t0 + t1 + t2);
        }
    }
    for ax in Axis::BOTH {
        x[p.iv(0, ax)] = p.v0_bar.axis(ax);
    }
    x
}

/// Solve, reporting iteration count and wall time.
pub fn solve_nlp(
    problem: &NlpProblem,
    guess: &[f64],
    opts: &SolveOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    let start = Instant::now();
    let sol = solver::solve(problem, guess, opts)?;
    Ok((
        sol.x,
        SolveStats {
            iterations: sol.iterations,
            wall_time: start.elapsed().as_secs_f64(),
        },
    ))
}

impl Problem for NlpProblem {
    fn num_vars(&self) -> usize {
        self.num_vars
    }

    fn num_eq(&self) -> usize {
        2 + self.n + 4 * self.n
    }

    fn num_ineq(&self) -> usize {
        let movable = self.delta_var.iter().filter(|d| d.is_some()).count();
        6 * self.n + 8 * self.n + 8 * self.n + 4 + 4 * movable + 2 * self.repairs.len()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let mut j = 0.0;
        for k in 0..self.n {
            for i in 0..3 {
                j += x[self.itau(Axis::X, k, i)];
            }
        }
        j + SLACK_WEIGHT * (x[self.is0()].powi(2) + x[self.isn()].powi(2))
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        grad.fill(0.0);
        for k in 0..self.n {
            for i in 0..3 {
                grad[self.itau(Axis::X, k, i)] = 1.0;
            }
        }
        grad[self.is0()] = 2.0 * SLACK_WEIGHT * x[self.is0()];
        grad[self.isn()] = 2.0 * SLACK_WEIGHT * x[self.isn()];
    }

    fn eq_values(&self, x: &[f64], out: &mut [f64]) {
        let mut row = 0;
        for ax in Axis::BOTH {
            out[row] = x[self.iv(0, ax)] - self.v0_bar.axis(ax);
            row += 1;
        }
        for k in 0..self.n {
            let tx: f64 = (0..3).map(|i| x[self.itau(Axis::X, k, i)]).sum();
            let ty: f64 = (0..3).map(|i| x[self.itau(Axis::Y, k, i)]).sum();
            out[row] = tx - ty;
            row += 1;
        }
        for k in 0..self.n {
            for ax in Axis::BOTH {
                let a = self.a_max;
                let (als, _) = self.alpha_start(x, k, ax);
                let (ale, _) = self.alpha_end(x, k, ax);
                let (a_s, a_e) = (a * als, a * ale);
                let v = x[self.iv(k, ax)];
                let t0 = x[self.itau(ax, k, 0)];
                let t1 = x[self.itau(ax, k, 1)];
                let t2 = x[self.itau(ax, k, 2)];
                let (d0, _) = self.delta(x, k, ax);
                let (d1, _) = self.delta(x, k + 1, ax);
                out[row] = self.waypoints[k].axis(ax) + d0
                    + v * (t0 + t1 + t2)
                    + a_s * (0.5 * t0 * t0 + t0 * (t1 + t2))
                    + 0.5 * a_e * t2 * t2
                    - self.waypoints[k + 1].axis(ax)
                    - d1;
                row += 1;
                let v_next = if k + 1 < self.n {
                    x[self.iv(k + 1, ax)]
                } else {
                    0.0
                };
                out[row] = v + a_s * t0 + a_e * t2 - v_next;
                row += 1;
            }
        }
    }

    fn eq_jacobian(&self, x: &[f64], out: &mut Vec<Entry>) {
        out.clear();
        let mut row = 0;
        for ax in Axis::BOTH {
            out.push((row, self.iv(0, ax), 1.0));
            row += 1;
        }
        for k in 0..self.n {
            for i in 0..3 {
                out.push((row, self.itau(Axis::X, k, i), 1.0));
                out.push((row, self.itau(Axis::Y, k, i), -1.0));
            }
            row += 1;
        }
        for k in 0..self.n {
            for ax in Axis::BOTH {
                let a = self.a_max;
                let (als, ia) = self.alpha_start(x, k, ax);
                let (ale, ie) = self.alpha_end(x, k, ax);
                let (a_s, a_e) = (a * als, a * ale);
                let v = x[self.iv(k, ax)];
                let t0 = x[self.itau(ax, k, 0)];
                let t1 = x[self.itau(ax, k, 1)];
                let t2 = x[self.itau(ax, k, 2)];
                // position row
                out.push((row, self.iv(k, ax), t0 + t1 + t2));
                out.push((row, self.itau(ax, k, 0), v + a_s * (t0 + t1 + t2)));
                out.push((row, self.itau(ax, k, 1), v + a_s * t0));
                out.push((row, self.itau(ax, k, 2), v + a_s * t0 + a_e * t2));
                if let (_, Some(idx)) = self.delta(x, k, ax) {
                    out.push((row, idx, 1.0));
                }
                if let (_, Some(idx)) = self.delta(x, k + 1, ax) {
                    out.push((row, idx, -1.0));
                }
                if let Some(idx) = ia {
                    out.push((row, idx, a * (0.5 * t0 * t0 + t0 * (t1 + t2))));
                }
                if let Some(idx) = ie {
                    out.push((row, idx, 0.5 * a * t2 * t2));
                }
                row += 1;
                // velocity row
                out.push((row, self.iv(k, ax), 1.0));
                out.push((row, self.itau(ax, k, 0), a_s));
                out.push((row, self.itau(ax, k, 2), a_e));
                if k + 1 < self.n {
                    out.push((row, self.iv(k + 1, ax), -1.0));
                }
                if let Some(idx) = ia {
                    out.push((row, idx, a * t0));
                }
                if let Some(idx) = ie {
                    out.push((row, idx, a * t2));
                }
                row += 1;
            }
        }
    }

    fn ineq_values(&self, x: &[f64], out: &mut [f64]) {
        let mut row = 0;
        // tau >= 0
        for ax in Axis::BOTH {
            for k in 0..self.n {
                for i in 0..3 {
                    out[row] = -x[self.itau(ax, k, i)];
                    row += 1;
                }
            }
        }
        // velocity boxes on v_k and the post-acceleration v'_k
        for k in 0..self.n {
            for ax in Axis::BOTH {
                let v = x[self.iv(k, ax)];
                let (als, _) = self.alpha_start(x, k, ax);
                let vp = v + self.a_max * als * x[self.itau(ax, k, 0)];
                out[row] = v - self.v_max;
                out[row + 1] = -v - self.v_max;
                out[row + 2] = vp - self.v_max;
                out[row + 3] = -vp - self.v_max;
                row += 4;
            }
        }
        // coast endpoints inside the owning corridor
        for k in 0..self.n {
            for ax in Axis::BOTH {
                let (lo, hi) = self.boxes[k].interval(ax);
                let a_s = self.a_max * self.alpha_start(x, k, ax).0;
                let v = x[self.iv(k, ax)];
                let t0 = x[self.itau(ax, k, 0)];
                let t1 = x[self.itau(ax, k, 1)];
                let (d0, _) = self.delta(x, k, ax);
                let c1 = self.waypoints[k].axis(ax) + d0 + v * t0 + 0.5 * a_s * t0 * t0;
                let c2 = c1 + (v + a_s * t0) * t1;
                out[row] = c1 - hi;
                out[row + 1] = lo - c1;
                out[row + 2] = c2 - hi;
                out[row + 3] = lo - c2;
                row += 4;
            }
        }
        // slacked free-direction magnitude bounds
        let a0 = x[self.ia0()];
        let an = x[self.ian()];
        let s0 = x[self.is0()];
        let sn = x[self.isn()];
        out[row] = a0 - 1.0 - s0 * s0;
        out[row + 1] = -a0 - 1.0 - s0 * s0;
        out[row + 2] = an - 1.0 - sn * sn;
        out[row + 3] = -an - 1.0 - sn * sn;
        row += 4;
        // offset boxes
        for k in 0..=self.n {
            if let Some(base) = self.delta_var[k] {
                let b = self.delta_bounds[k].as_ref().unwrap();
                for ax in Axis::BOTH {
                    let (lo, hi) = b.interval(ax);
                    let d = x[base + ax.index()];
                    out[row] = d - hi;
                    out[row + 1] = lo - d;
                    row += 2;
                }
            }
        }
        // repair constraints on parabolic extrema
        for r in &self.repairs {
            let (lo, hi) = self.boxes[r.k].interval(r.axis);
            let pstar = self.extremum_position(x, r);
            out[row] = pstar - hi;
            out[row + 1] = lo - pstar;
            row += 2;
        }
    }

    fn ineq_jacobian(&self, x: &[f64], out: &mut Vec<Entry>) {
        out.clear();
        let mut row = 0;
        for ax in Axis::BOTH {
            for k in 0..self.n {
                for i in 0..3 {
                    out.push((row, self.itau(ax, k, i), -1.0));
                    row += 1;
                }
            }
        }
        for k in 0..self.n {
            for ax in Axis::BOTH {
                let iv = self.iv(k, ax);
                let it0 = self.itau(ax, k, 0);
                let (als, ia) = self.alpha_start(x, k, ax);
                let a_s = self.a_max * als;
                let t0 = x[it0];
                out.push((row, iv, 1.0));
                out.push((row + 1, iv, -1.0));
                out.push((row + 2, iv, 1.0));
                out.push((row + 2, it0, a_s));
                out.push((row + 3, iv, -1.0));
                out.push((row + 3, it0, -a_s));
                if let Some(idx) = ia {
                    out.push((row + 2, idx, self.a_max * t0));
                    out.push((row + 3, idx, -self.a_max * t0));
                }
                row += 4;
            }
        }
        for k in 0..self.n {
            for ax in Axis::BOTH {
                let iv = self.iv(k, ax);
                let it0 = self.itau(ax, k, 0);
                let it1 = self.itau(ax, k, 1);
                let (als, ia) = self.alpha_start(x, k, ax);
                let a_s = self.a_max * als;
                let v = x[iv];
                let t0 = x[it0];
                let t1 = x[it1];
                // c1 derivatives
                let c1_v = t0;
                let c1_t0 = v + a_s * t0;
                // c2 = c1 + (v + a_s t0) t1
                let c2_v = t0 + t1;
                let c2_t0 = v + a_s * (t0 + t1);
                let c2_t1 = v + a_s * t0;
                for (r, sgn, dv, dt0, dt1) in [
                    (row, 1.0, c1_v, c1_t0, 0.0),
                    (row + 1, -1.0, c1_v, c1_t0, 0.0),
                    (row + 2, 1.0, c2_v, c2_t0, c2_t1),
                    (row + 3, -1.0, c2_v, c2_t0, c2_t1),
                ] {
                    out.push((r, iv, sgn * dv));
                    out.push((r, it0, sgn * dt0));
                    if dt1 != 0.0 {
                        out.push((r, it1, sgn * dt1));
                    }
                    if let (_, Some(idx)) = self.delta(x, k, ax) {
                        out.push((r, idx, sgn));
                    }
                    if let Some(idx) = ia {
                        let da = if r < row + 2 {
                            0.5 * self.a_max * t0 * t0
                        } else {
                            self.a_max * (0.5 * t0 * t0 + t0 * t1)
                        };
                        out.push((r, idx, sgn * da));
                    }
                }
                row += 4;
            }
        }
        let s0 = x[self.is0()];
        let sn = x[self.isn()];
        out.push((row, self.ia0(), 1.0));
        out.push((row, self.is0(), -2.0 * s0));
        out.push((row + 1, self.ia0(), -1.0));
        out.push((row + 1, self.is0(), -2.0 * s0));
        out.push((row + 2, self.ian(), 1.0));
        out.push((row + 2, self.isn(), -2.0 * sn));
        out.push((row + 3, self.ian(), -1.0));
        out.push((row + 3, self.isn(), -2.0 * sn));
        row += 4;
        for k in 0..=self.n {
            if let Some(base) = self.delta_var[k] {
                for ax in Axis::BOTH {
                    out.push((row, base + ax.index(), 1.0));
                    out.push((row + 1, base + ax.index(), -1.0));
                    row += 2;
                }
            }
        }
        for r in &self.repairs {
            let grads = self.extremum_gradient(x, r);
            for &(idx, g) in &grads {
                out.push((row, idx, g));
                out.push((row + 1, idx, -g));
            }
            row += 2;
        }
    }

    fn lagrangian_hessian(
        &self,
        x: &[f64],
        obj_scale: f64,
        lam_eq: &[f64],
        lam_ineq: &[f64],
        out: &mut Vec<Entry>,
    ) {
        out.clear();
        let push = |out: &mut Vec<Entry>, i: usize, j: usize, v: f64| {
            if v != 0.0 {
                if i >= j {
                    out.push((i, j, v));
                } else {
                    out.push((j, i, v));
                }
            }
        };
        // objective
        push(out, self.is0(), self.is0(), 2.0 * SLACK_WEIGHT * obj_scale);
        push(out, self.isn(), self.isn(), 2.0 * SLACK_WEIGHT * obj_scale);

        // equality rows: position and velocity chaining
        let mut row = 2 + self.n;
        for k in 0..self.n {
            for ax in Axis::BOTH {
                let a = self.a_max;
                let (als, ia) = self.alpha_start(x, k, ax);
                let (_ale, ie) = self.alpha_end(x, k, ax);
                let a_s = a * als;
                let iv = self.iv(k, ax);
                let it = [
                    self.itau(ax, k, 0),
                    self.itau(ax, k, 1),
                    self.itau(ax, k, 2),
                ];
                let t0 = x[it[0]];
                let t1 = x[it[1]];
                let t2 = x[it[2]];
                // position row
                let l = lam_eq[row];
                if l != 0.0 {
                    push(out, it[0], iv, l);
                    push(out, it[1], iv, l);
                    push(out, it[2], iv, l);
                    push(out, it[0], it[0], l * a_s);
                    push(out, it[1], it[0], l * a_s);
                    push(out, it[2], it[0], l * a_s);
                    push(out, it[2], it[2], l * a * self.alpha_end(x, k, ax).0);
                    if let Some(idx) = ia {
                        push(out, idx, it[0], l * a * (t0 + t1 + t2));
                        push(out, idx, it[1], l * a * t0);
                        push(out, idx, it[2], l * a * t0);
                    }
                    if let Some(idx) = ie {
                        push(out, idx, it[2], l * a * t2);
                    }
                }
                row += 1;
                // velocity row
                let l = lam_eq[row];
                if l != 0.0 {
                    if let Some(idx) = ia {
                        push(out, idx, it[0], l * a);
                    }
                    if let Some(idx) = ie {
                        push(out, idx, it[2], l * a);
                    }
                }
                row += 1;
            }
        }

        // inequality rows
        let mut row = 6 * self.n;
        // velocity boxes: only v' rows are bilinear (alpha variable x tau0)
        for k in 0..self.n {
            for ax in Axis::BOTH {
                if let (_, Some(idx)) = self.alpha_start(x, k, ax) {
                    let it0 = self.itau(ax, k, 0);
                    let lp = lam_ineq[row + 2];
                    let lm = lam_ineq[row + 3];
                    push(out, idx, it0, (lp - lm) * self.a_max);
                }
                row += 4;
            }
        }
        // coast endpoints
        for k in 0..self.n {
            for ax in Axis::BOTH {
                let iv = self.iv(k, ax);
                let it0 = self.itau(ax, k, 0);
                let it1 = self.itau(ax, k, 1);
                let (als, ia) = self.alpha_start(x, k, ax);
                let a_s = self.a_max * als;
                let t0 = x[it0];
                let t1 = x[it1];
                let l1 = lam_ineq[row] - lam_ineq[row + 1];
                let l2 = lam_ineq[row + 2] - lam_ineq[row + 3];
                // c1: (v,t0)=1, (t0,t0)=a_s, (alpha,t0)=a t0
                push(out, it0, iv, l1 + l2);
                push(out, it0, it0, (l1 + l2) * a_s);
                // c2 extras: (v,t1)=1, (t0,t1)=a_s
                push(out, it1, iv, l2);
                push(out, it1, it0, l2 * a_s);
                if let Some(idx) = ia {
                    push(out, idx, it0, l1 * self.a_max * t0);
                    push(out, idx, it0, l2 * self.a_max * (t0 + t1));
                    push(out, idx, it1, l2 * self.a_max * t0);
                }
                row += 4;
            }
        }
        // slacked magnitude bounds: (s, s) = -2 per row
        push(
            out,
            self.is0(),
            self.is0(),
            -2.0 * (lam_ineq[row] + lam_ineq[row + 1]),
        );
        push(
            out,
            self.isn(),
            self.isn(),
            -2.0 * (lam_ineq[row + 2] + lam_ineq[row + 3]),
        );
        row += 4;
        // offset boxes are linear
        let movable = self.delta_var.iter().filter(|d| d.is_some()).count();
        row += 4 * movable;
        // repair constraints
        for r in &self.repairs {
            let l = lam_ineq[row] - lam_ineq[row + 1];
            if l != 0.0 {
                for (i, j, v) in self.extremum_hessian(x, r) {
                    push(out, i, j, l * v);
                }
            }
            row += 2;
        }
    }
}

impl NlpProblem {
    /// Position of the analytic velocity zero-crossing of the targeted
    /// parabolic phase: `p - v^2 / (2 a alpha)` evaluated at phase entry.
    fn extremum_position(&self, x: &[f64], r: &Repair) -> f64 {
        let (k, ax) = (r.k, r.axis);
        let v = x[self.iv(k, ax)];
        let (d0, _) = self.delta(x, k, ax);
        let p = self.waypoints[k].axis(ax) + d0;
        match r.phase {
            RepairPhase::First => {
                let b = self.a_max * self.alpha_start(x, k, ax).0;
                p - v * v / (2.0 * b)
            }
            RepairPhase::Third => {
                let a_s = self.a_max * self.alpha_start(x, k, ax).0;
                let b = self.a_max * self.alpha_end(x, k, ax).0;
                let t0 = x[self.itau(ax, k, 0)];
                let t1 = x[self.itau(ax, k, 1)];
                let u = v + a_s * t0;
                let c2 = p + v * t0 + 0.5 * a_s * t0 * t0 + u * t1;
                c2 - u * u / (2.0 * b)
            }
        }
    }

    fn extremum_gradient(&self, x: &[f64], r: &Repair) -> Vec<(usize, f64)> {
        let (k, ax) = (r.k, r.axis);
        let a = self.a_max;
        let iv = self.iv(k, ax);
        let v = x[iv];
        let (als, ia) = self.alpha_start(x, k, ax);
        let mut grads = Vec::new();
        if let (_, Some(idx)) = self.delta(x, k, ax) {
            grads.push((idx, 1.0));
        }
        match r.phase {
            RepairPhase::First => {
                let b = a * als;
                grads.push((iv, -v / b));
                if let Some(idx) = ia {
                    grads.push((idx, v * v * a / (2.0 * b * b)));
                }
            }
            RepairPhase::Third => {
                let (ale, ie) = self.alpha_end(x, k, ax);
                let a_s = a * als;
                let b = a * ale;
                let it0 = self.itau(ax, k, 0);
                let it1 = self.itau(ax, k, 1);
                let t0 = x[it0];
                let t1 = x[it1];
                let u = v + a_s * t0;
                grads.push((iv, (t0 + t1) - u / b));
                grads.push((it0, v + a_s * (t0 + t1) - u * a_s / b));
                grads.push((it1, u));
                if let Some(idx) = ia {
                    grads.push((idx, a * (0.5 * t0 * t0 + t0 * t1) - u * a * t0 / b));
                }
                if let Some(idx) = ie {
                    grads.push((idx, u * u * a / (2.0 * b * b)));
                }
            }
        }
        grads
    }

    fn extremum_hessian(&self, x: &[f64], r: &Repair) -> Vec<Entry> {
        let (k, ax) = (r.k, r.axis);
        let a = self.a_max;
        let iv = self.iv(k, ax);
        let v = x[iv];
        let (als, ia) = self.alpha_start(x, k, ax);
        let mut h = Vec::new();
        match r.phase {
            RepairPhase::First => {
                let b = a * als;
                h.push((iv, iv, -1.0 / b));
                if let Some(idx) = ia {
                    h.push((idx, iv, v * a / (b * b)));
                    h.push((idx, idx, -v * v * a * a / (b * b * b)));
                }
            }
            RepairPhase::Third => {
                let (ale, ie) = self.alpha_end(x, k, ax);
                let a_s = a * als;
                let b = a * ale;
                let it0 = self.itau(ax, k, 0);
                let it1 = self.itau(ax, k, 1);
                let t0 = x[it0];
                let t1 = x[it1];
                let u = v + a_s * t0;
                // c2 part
                h.push((it0, iv, 1.0));
                h.push((it1, iv, 1.0));
                h.push((it0, it0, a_s));
                h.push((it1, it0, a_s));
                if let Some(idx) = ia {
                    h.push((idx, it0, a * (t0 + t1)));
                    h.push((idx, it1, a * t0));
                }
                // -u^2/(2b) part; u depends on (v, t0, alpha_s)
                h.push((iv, iv, -1.0 / b));
                h.push((it0, iv, -a_s / b));
                h.push((it0, it0, -a_s * a_s / b));
                if let Some(idx) = ia {
                    h.push((idx, iv, -a * t0 / b));
                    h.push((idx, it0, -(a * t0 * a_s + u * a) / b));
                    h.push((idx, idx, -a * t0 * a * t0 / b));
                }
                if let Some(idx) = ie {
                    h.push((idx, iv, u * a / (b * b)));
                    h.push((idx, it0, u * a_s * a / (b * b)));
                    if let Some(ja) = ia {
                        h.push((idx, ja, u * a * t0 * a / (b * b)));
                    }
                    h.push((idx, idx, -u * u * a * a / (b * b * b)));
                }
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corridors::corridors_for;
    use crate::heuristics;
    use crate::kinematics::min_time_1d;
    use crate::solver::{hessian_fd_error, jacobian_fd_error};
    use crate::world::{load_map, Vehicle};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn l_turn_scenario() -> Scenario {
        let grid =
            load_map("cells 6 6 0.5\n####..\n####..\n####..\n####..\n......\n......\n").unwrap();
        Scenario {
            grid,
            vehicle: Vehicle::new(0.5, 0.5, 1.0, 2.0).unwrap(),
            p0: Vec2::new(0.5, 0.5),
            pn: Vec2::new(2.5, 2.75),
            v0: Vec2::new(0.0, 0.0),
        }
    }

    fn straight_scenario() -> Scenario {
        let grid = load_map("cells 2 6 0.5\n......\n......\n").unwrap();
        Scenario {
            grid,
            vehicle: Vehicle::new(0.4, 0.4, 1.0, 2.0).unwrap(),
            p0: Vec2::new(0.4, 0.5),
            pn: Vec2::new(2.6, 0.5),
            v0: Vec2::new(0.0, 0.0),
        }
    }

    fn problem_for(scenario: &Scenario) -> NlpProblem {
        let seq = corridors_for(scenario).unwrap();
        let sel = heuristics::select(&seq, scenario).unwrap();
        assemble(&sel, &seq, scenario).unwrap()
    }

    #[test]
    fn variable_and_constraint_counts() {
        let scenario = straight_scenario();
        let p = problem_for(&scenario);
        assert_eq!(p.num_primitives(), 1);
        assert_eq!(p.num_vars(), 12);
        assert_eq!(p.num_eq(), 7);

        let scenario = l_turn_scenario();
        let p = problem_for(&scenario);
        assert_eq!(p.num_primitives(), 2);
        let movable = p.delta_var.iter().filter(|d| d.is_some()).count();
        assert_eq!(p.num_vars(), 20 + 2 * movable);
        assert_eq!(p.num_eq(), 2 + 2 + 8);
    }

    #[test]
    fn derivative_checks_at_random_points() {
        let scenario = l_turn_scenario();
        let mut p = problem_for(&scenario);
        // exercise the repair-constraint derivatives too
        p.add_extremum_constraints(&[
            Repair {
                k: 0,
                axis: Axis::X,
                phase: RepairPhase::First,
            },
            Repair {
                k: 1,
                axis: Axis::Y,
                phase: RepairPhase::Third,
            },
        ]);
        let base = initial_guess(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let x: Vec<f64> = base
                .iter()
                .map(|v| v + rng.gen_range(-0.05..0.05))
                .collect();
            assert!(jacobian_fd_error(&p, &x) < 1e-6);
            let lam_eq: Vec<f64> = (0..p.num_eq()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lam_ineq: Vec<f64> = (0..p.num_ineq())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            assert!(hessian_fd_error(&p, &x, &lam_eq, &lam_ineq) < 1e-4);
        }
    }

    #[test]
    fn straight_line_matches_min_time_oracle() {
        let scenario = straight_scenario();
        let p = problem_for(&scenario);
        let guess = initial_guess(&p);
        let opts = SolveOptions::default();
        let (x, _) = solve_nlp(&p, &guess, &opts).unwrap();
        let traj = p.trajectory(&x);
        let v = &scenario.vehicle;
        let oracle = min_time_1d(scenario.p0.x, scenario.pn.x, 0.0, v.v_max, v.a_max).total_time();
        assert!(
            (traj.t_move() - oracle).abs() < 1e-6,
            "t_move {} vs oracle {}",
            traj.t_move(),
            oracle
        );
        let (pe, ve, _) = traj.eval(traj.t_move());
        assert!((pe - scenario.pn).norm() < 1e-5);
        assert!(ve.norm() < 1e-5);
    }

    #[test]
    fn l_turn_solves_and_reaches_goal() {
        let scenario = l_turn_scenario();
        let p = problem_for(&scenario);
        let guess = initial_guess(&p);
        let opts = SolveOptions::default();
        let (x, stats) = solve_nlp(&p, &guess, &opts).unwrap();
        assert!(stats.iterations > 0);
        let traj = p.trajectory(&x);
        let (pe, ve, _) = traj.eval(traj.t_move());
        assert!((pe - scenario.pn).norm() < 1e-5, "endpoint {:?}", pe);
        assert!(ve.norm() < 1e-5, "final velocity {:?}", ve);
        // objective consistency: total time equals the x-phase sum
        let sum_tx: f64 = (0..p.num_primitives())
            .flat_map(|k| (0..3).map(move |i| (k, i)))
            .map(|(k, i)| x[p.itau(Axis::X, k, i)])
            .sum();
        assert!((traj.t_move() - sum_tx).abs() < 1e-9);
        // slack penalty inactive
        let penalty = SLACK_WEIGHT * (x[p.is0()].powi(2) + x[p.isn()].powi(2));
        assert!(penalty < 1e-6, "slack penalty {}", penalty);
    }

    #[test]
    fn movable_waypoint_adds_two_vars_and_four_bounds() {
        let scenario = l_turn_scenario();
        let seq = corridors_for(&scenario).unwrap();
        let mut sel = heuristics::select(&seq, &scenario).unwrap();
        let without = assemble(&sel, &seq, &scenario).unwrap();
        if sel.movable[1].is_none() {
            let shrunk = heuristics::shrunken_overlap(&seq, 1, &scenario);
            let p1 = sel.waypoints[1];
            sel.movable[1] = Some(Rect::new(shrunk.min - p1, shrunk.max - p1));
        } else {
            sel.movable[1] = None;
        }
        let with = assemble(&sel, &seq, &scenario).unwrap();
        assert_eq!(
            with.num_vars().abs_diff(without.num_vars()),
            2
        );
        assert_eq!(with.num_ineq().abs_diff(without.num_ineq()), 4);
    }

    #[test]
    fn mismatched_waypoint_rejected() {
        let scenario = l_turn_scenario();
        let seq = corridors_for(&scenario).unwrap();
        let mut sel = heuristics::select(&seq, &scenario).unwrap();
        sel.waypoints[1] = Vec2::new(0.5, 2.5); // inside neither corridor box pair
        match assemble(&sel, &seq, &scenario) {
            Err(Error::SelectionMismatch { index }) => assert_eq!(index, 1),
            other => panic!("expected mismatch, got {:?}", other.map(|_| ())),
        }
    }
}
