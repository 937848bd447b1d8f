//! Direct-transcription baseline: multi-stage multiple shooting with
//! time scaling through the same corridor sequence, one stage per
//! corridor, piecewise-constant controls, and exact double-integrator
//! propagation between grid points. Serves as the optimality reference
//! for the primitive-based planner.

use std::time::Instant;

use crate::corridors::CorridorSequence;
use crate::error::Result;
use crate::geom::{Axis, Rect, Vec2};
use crate::heuristics::shrunken_overlap;
use crate::kinematics::{Primitive1D, Primitive2D, Trajectory};
use crate::planner::{PlanReport, PlanStatus};
use crate::solver::{self, Entry, Problem, SolveOptions};
use crate::world::Scenario;

/// Default grid points per corridor stage.
pub const DEFAULT_GRID: usize = 30;
/// Lower bound on a stage duration.
const T_MIN: f64 = 1e-6;

/// The transcribed optimal control problem.
///
/// Variable layout with `m` global grid points (stage boundaries shared)
/// and `k = m - 1` intervals:
/// ```text
///   [0, 4m)          states: p_x, p_y, v_x, v_y per grid point
///   [4m, 4m + 2k)    controls: a_x, a_y per interval
///   [4m + 2k, ..+n)  stage durations T_i
/// ```
pub struct TranscribedOcp {
    n_stages: usize,
    n_grid: usize,
    /// Admissible box for the vehicle center in each stage's corridor.
    boxes: Vec<Rect>,
    p0: Vec2,
    v0: Vec2,
    pn: Vec2,
    v_max: f64,
    a_max: f64,
    m: usize,
}

impl TranscribedOcp {
    pub fn new(sequence: &CorridorSequence, scenario: &Scenario, n_grid: usize) -> TranscribedOcp {
        assert!(n_grid >= 2);
        let half = scenario.vehicle.half_extents();
        TranscribedOcp {
            n_stages: sequence.len(),
            n_grid,
            boxes: sequence.rects().iter().map(|r| r.shrink(half)).collect(),
            p0: scenario.p0,
            v0: scenario.v0,
            pn: scenario.pn,
            v_max: scenario.vehicle.v_max,
            a_max: scenario.vehicle.a_max,
            m: sequence.len() * (n_grid - 1) + 1,
        }
    }

    fn ip(&self, j: usize, ax: Axis) -> usize {
        4 * j + ax.index()
    }
    fn iv(&self, j: usize, ax: Axis) -> usize {
        4 * j + 2 + ax.index()
    }
    fn ia(&self, j: usize, ax: Axis) -> usize {
        4 * self.m + 2 * j + ax.index()
    }
    fn it(&self, stage: usize) -> usize {
        4 * self.m + 2 * (self.m - 1) + stage
    }
    /// Stage owning global interval `j`.
    fn stage_of(&self, j: usize) -> usize {
        j / (self.n_grid - 1)
    }
    /// Fraction of the stage duration covered by one interval.
    fn c(&self) -> f64 {
        1.0 / (self.n_grid - 1) as f64
    }

    pub fn stage_durations(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_stages).map(|i| x[self.it(i)]).collect()
    }

    /// Straight-line interpolation through the overlap centers at
    /// conservative speed `v_max / 2`.
    pub fn initial_guess(&self, sequence: &CorridorSequence, scenario: &Scenario) -> Vec<f64> {
        let mut waypoints = vec![self.p0];
        for i in 1..self.n_stages {
            waypoints.push(shrunken_overlap(sequence, i, scenario).center());
        }
        waypoints.push(self.pn);

        let mut x = vec![0.0; self.num_vars()];
        let nloc = self.n_grid - 1;
        for i in 0..self.n_stages {
            let (a, b) = (waypoints[i], waypoints[i + 1]);
            let len = (b - a).norm();
            let cruise = 0.5 * self.v_max;
            let v = if len > 1e-12 {
                (b - a).scale(cruise / len)
            } else {
                Vec2::new(0.0, 0.0)
            };
            x[self.it(i)] = (len / cruise).max(0.2);
            for j in 0..self.n_grid {
                let g = i * nloc + j;
                let frac = j as f64 / nloc as f64;
                let p = a + (b - a).scale(frac);
                for ax in Axis::BOTH {
                    x[self.ip(g, ax)] = p.axis(ax);
                    x[self.iv(g, ax)] = v.axis(ax);
                }
            }
        }
        for ax in Axis::BOTH {
            x[self.ip(0, ax)] = self.p0.axis(ax);
            x[self.iv(0, ax)] = self.v0.axis(ax);
            x[self.ip(self.m - 1, ax)] = self.pn.axis(ax);
            x[self.iv(self.m - 1, ax)] = 0.0;
        }
        x
    }

    /// Piecewise-constant-acceleration trajectory from the solved grid.
    pub fn trajectory(&self, x: &[f64]) -> Trajectory {
        let mut pieces = Vec::with_capacity(self.m - 1);
        for j in 0..self.m - 1 {
            let dt = (x[self.it(self.stage_of(j))] * self.c()).max(0.0);
            let prim1 = |ax: Axis| Primitive1D {
                alpha_start: x[self.ia(j, ax)] / self.a_max,
                alpha_end: 0.0,
                p_start: x[self.ip(j, ax)],
                v_start: x[self.iv(j, ax)],
                tau: [dt, 0.0, 0.0],
                a_max: self.a_max,
            };
            pieces.push(Primitive2D {
                x: prim1(Axis::X),
                y: prim1(Axis::Y),
            });
        }
        Trajectory::from_primitives(pieces)
    }
}

impl Problem for TranscribedOcp {
    fn num_vars(&self) -> usize {
        4 * self.m + 2 * (self.m - 1) + self.n_stages
    }
    // 4 dynamics rows per interval plus 8 boundary pins
    fn num_eq(&self) -> usize {
        4 * (self.m - 1) + 8
    }
    // 4 box rows per (stage, local point), 4 velocity rows per point,
    // 4 control rows per interval, one duration bound per stage
    fn num_ineq(&self) -> usize {
        4 * self.n_stages * self.n_grid + 4 * self.m + 4 * (self.m - 1) + self.n_stages
    }

    fn objective(&self, x: &[f64]) -> f64 {
        (0..self.n_stages).map(|i| x[self.it(i)]).sum()
    }
    fn gradient(&self, _x: &[f64], grad: &mut [f64]) {
        grad.fill(0.0);
        for i in 0..self.n_stages {
            grad[self.it(i)] = 1.0;
        }
    }

    fn eq_values(&self, x: &[f64], out: &mut [f64]) {
        let c = self.c();
        let mut r = 0;
        for j in 0..self.m - 1 {
            let t = x[self.it(self.stage_of(j))];
            for ax in Axis::BOTH {
                let (p, v, a) = (x[self.ip(j, ax)], x[self.iv(j, ax)], x[self.ia(j, ax)]);
                let dt = c * t;
                out[r] = x[self.ip(j + 1, ax)] - p - v * dt - 0.5 * a * dt * dt;
                out[r + 1] = x[self.iv(j + 1, ax)] - v - a * dt;
                r += 2;
            }
        }
        for ax in Axis::BOTH {
            out[r] = x[self.ip(0, ax)] - self.p0.axis(ax);
            out[r + 1] = x[self.iv(0, ax)] - self.v0.axis(ax);
            out[r + 2] = x[self.ip(self.m - 1, ax)] - self.pn.axis(ax);
            out[r + 3] = x[self.iv(self.m - 1, ax)];
            r += 4;
        }
    }

    fn eq_jacobian(&self, x: &[f64], out: &mut Vec<Entry>) {
        out.clear();
        let c = self.c();
        let mut r = 0;
        for j in 0..self.m - 1 {
            let ti = self.it(self.stage_of(j));
            let t = x[ti];
            for ax in Axis::BOTH {
                let (v, a) = (x[self.iv(j, ax)], x[self.ia(j, ax)]);
                out.push((r, self.ip(j + 1, ax), 1.0));
                out.push((r, self.ip(j, ax), -1.0));
                out.push((r, self.iv(j, ax), -c * t));
                out.push((r, self.ia(j, ax), -0.5 * c * c * t * t));
                out.push((r, ti, -v * c - a * c * c * t));
                out.push((r + 1, self.iv(j + 1, ax), 1.0));
                out.push((r + 1, self.iv(j, ax), -1.0));
                out.push((r + 1, self.ia(j, ax), -c * t));
                out.push((r + 1, ti, -a * c));
                r += 2;
            }
        }
        for ax in Axis::BOTH {
            out.push((r, self.ip(0, ax), 1.0));
            out.push((r + 1, self.iv(0, ax), 1.0));
            out.push((r + 2, self.ip(self.m - 1, ax), 1.0));
            out.push((r + 3, self.iv(self.m - 1, ax), 1.0));
            r += 4;
        }
    }

    fn ineq_values(&self, x: &[f64], out: &mut [f64]) {
        let nloc = self.n_grid - 1;
        let mut r = 0;
        for i in 0..self.n_stages {
            let b = &self.boxes[i];
            for j in 0..self.n_grid {
                let g = i * nloc + j;
                for ax in Axis::BOTH {
                    let (lo, hi) = b.interval(ax);
                    out[r] = x[self.ip(g, ax)] - hi;
                    out[r + 1] = lo - x[self.ip(g, ax)];
                    r += 2;
                }
            }
        }
        for g in 0..self.m {
            for ax in Axis::BOTH {
                out[r] = x[self.iv(g, ax)] - self.v_max;
                out[r + 1] = -x[self.iv(g, ax)] - self.v_max;
                r += 2;
            }
        }
        for j in 0..self.m - 1 {
            for ax in Axis::BOTH {
                out[r] = x[self.ia(j, ax)] - self.a_max;
                out[r + 1] = -x[self.ia(j, ax)] - self.a_max;
                r += 2;
            }
        }
        for i in 0..self.n_stages {
            out[r] = T_MIN - x[self.it(i)];
            r += 1;
        }
    }

    fn ineq_jacobian(&self, _x: &[f64], out: &mut Vec<Entry>) {
        out.clear();
        let nloc = self.n_grid - 1;
        let mut r = 0;
        for i in 0..self.n_stages {
            for j in 0..self.n_grid {
                let g = i * nloc + j;
                for ax in Axis::BOTH {
                    out.push((r, self.ip(g, ax), 1.0));
                    out.push((r + 1, self.ip(g, ax), -1.0));
                    r += 2;
                }
            }
        }
        for g in 0..self.m {
            for ax in Axis::BOTH {
                out.push((r, self.iv(g, ax), 1.0));
                out.push((r + 1, self.iv(g, ax), -1.0));
                r += 2;
            }
        }
        for j in 0..self.m - 1 {
            for ax in Axis::BOTH {
                out.push((r, self.ia(j, ax), 1.0));
                out.push((r + 1, self.ia(j, ax), -1.0));
                r += 2;
            }
        }
        for i in 0..self.n_stages {
            out.push((r, self.it(i), -1.0));
            r += 1;
        }
    }

    fn lagrangian_hessian(
        &self,
        x: &[f64],
        _obj_scale: f64,
        lam_eq: &[f64],
        _lam_ineq: &[f64],
        out: &mut Vec<Entry>,
    ) {
        out.clear();
        let c = self.c();
        let mut r = 0;
        for j in 0..self.m - 1 {
            let ti = self.it(self.stage_of(j));
            let t = x[ti];
            for ax in Axis::BOTH {
                let a = x[self.ia(j, ax)];
                let lp = lam_eq[r];
                let lv = lam_eq[r + 1];
                // position row: -v c T - 0.5 a c^2 T^2
                out.push((ti, self.iv(j, ax), -c * lp));
                out.push((ti, self.ia(j, ax), -c * c * t * lp - c * lv));
                out.push((ti, ti, -a * c * c * lp));
                r += 2;
            }
        }
    }
}

/// Solve the baseline through `sequence` with `n_grid` points per stage.
pub fn solve_baseline(
    sequence: &CorridorSequence,
    scenario: &Scenario,
    n_grid: usize,
) -> Result<(Trajectory, PlanReport)> {
    let start = Instant::now();
    let ocp = TranscribedOcp::new(sequence, scenario, n_grid);
    let guess = ocp.initial_guess(sequence, scenario);
    let sol = solver::solve(&ocp, &guess, &SolveOptions::default())?;
    let traj = ocp.trajectory(&sol.x);
    let dt = start.elapsed().as_secs_f64();
    let t_move = traj.t_move();
    Ok((
        traj,
        PlanReport {
            status: PlanStatus::Solved,
            t_solver: dt,
            t_total: dt,
            t_move,
            n_corridors: sequence.len(),
            n_repair_rounds: 0,
            n_flip_rounds: 0,
            t_move_pre_flip: None,
        },
    ))
}

/// Number of uniform samples at `rate_hz` that leave the corridors. The
/// transcription constrains only its grid points, so its solutions can cut
/// corners between them; the primitive-based planner's cannot. Membership
/// is tested with a 1e-5 slop so that solver convergence noise at the grid
/// points themselves is not counted as an inter-sample excursion.
pub fn intersample_violation_count(
    trajectory: &Trajectory,
    sequence: &CorridorSequence,
    scenario: &Scenario,
    rate_hz: f64,
) -> usize {
    let half = scenario.vehicle.half_extents();
    trajectory
        .sample(rate_hz)
        .iter()
        .filter(|s| !sequence.admits(s.p, half, 1e-5))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corridors::corridors_for;
    use crate::kinematics::min_time_1d;
    use crate::planner::plan;
    use crate::solver::{hessian_fd_error, jacobian_fd_error};
    use crate::world::{load_map, Vehicle};

    fn vehicle() -> Vehicle {
        Vehicle {
            width: 0.5,
            length: 0.5,
            v_max: 1.0,
            a_max: 2.0,
        }
    }

    fn scenario(map: &str, p0: Vec2, pn: Vec2) -> Scenario {
        Scenario {
            grid: load_map(map).unwrap(),
            vehicle: vehicle(),
            p0,
            pn,
            v0: Vec2::new(0.0, 0.0),
        }
    }

    fn straight_scenario() -> Scenario {
        scenario(
            "cells 2 6 0.5\n......\n......\n",
            Vec2::new(0.4, 0.5),
            Vec2::new(2.6, 0.5),
        )
    }

    fn l_turn_scenario() -> Scenario {
        scenario(
            "cells 6 6 0.5\n####..\n####..\n####..\n####..\n......\n......\n",
            Vec2::new(0.5, 0.5),
            Vec2::new(2.5, 2.75),
        )
    }

    #[test]
    fn derivative_check_at_guess() {
        let sc = l_turn_scenario();
        let seq = corridors_for(&sc).unwrap();
        let ocp = TranscribedOcp::new(&seq, &sc, 5);
        let mut x = ocp.initial_guess(&seq, &sc);
        // perturb so no derivative sits on a kink
        for (i, v) in x.iter_mut().enumerate() {
            *v += 1e-3 * ((i * 2654435761 % 97) as f64 / 97.0 - 0.5);
        }
        assert!(jacobian_fd_error(&ocp, &x) < 1e-6);
        let lam_eq: Vec<f64> = (0..ocp.num_eq()).map(|i| ((i % 7) as f64) - 3.0).collect();
        let lam_ineq: Vec<f64> = (0..ocp.num_ineq()).map(|i| ((i % 5) as f64) / 5.0).collect();
        assert!(hessian_fd_error(&ocp, &x, &lam_eq, &lam_ineq) < 1e-4);
    }

    #[test]
    fn single_corridor_one_axis_near_closed_form() {
        let sc = straight_scenario();
        let seq = corridors_for(&sc).unwrap();
        assert_eq!(seq.len(), 1);
        let (traj, report) = solve_baseline(&seq, &sc, DEFAULT_GRID).unwrap();
        let v = &sc.vehicle;
        let oracle = min_time_1d(sc.p0.x, sc.pn.x, 0.0, v.v_max, v.a_max).total_time();
        let grid_step = report.t_move / (DEFAULT_GRID - 1) as f64;
        assert!(
            report.t_move >= oracle - 1e-6,
            "baseline beat the closed form: {} < {}",
            report.t_move,
            oracle
        );
        assert!(
            report.t_move <= oracle + grid_step,
            "baseline gap too large: {} vs {}",
            report.t_move,
            oracle
        );
        let (pe, ve, _) = traj.eval(traj.t_move());
        assert!((pe - sc.pn).norm() < 1e-5);
        assert!(ve.norm() < 1e-5);
    }

    #[test]
    fn l_turn_cross_checks_the_planner() {
        let sc = l_turn_scenario();
        let seq = corridors_for(&sc).unwrap();
        let (_, baseline) = solve_baseline(&seq, &sc, DEFAULT_GRID).unwrap();
        let pmp = plan(&sc);
        assert!(pmp.is_solved());
        let gap = (pmp.report.t_move - baseline.t_move) / baseline.t_move;
        assert!(
            gap.abs() < 0.02,
            "planner vs baseline gap {:.4} ({} vs {})",
            gap,
            pmp.report.t_move,
            baseline.t_move
        );
    }

    #[test]
    fn grid_refinement_does_not_worsen() {
        let sc = l_turn_scenario();
        let seq = corridors_for(&sc).unwrap();
        let (_, coarse) = solve_baseline(&seq, &sc, 30).unwrap();
        let (_, fine) = solve_baseline(&seq, &sc, 60).unwrap();
        assert!(fine.t_move <= coarse.t_move + 1e-6);
    }

    #[test]
    fn resimulating_controls_reproduces_grid_states() {
        let sc = l_turn_scenario();
        let seq = corridors_for(&sc).unwrap();
        let ocp = TranscribedOcp::new(&seq, &sc, 12);
        let guess = ocp.initial_guess(&seq, &sc);
        let sol = solver::solve(&ocp, &guess, &SolveOptions::default()).unwrap();
        let x = &sol.x;
        let c = ocp.c();
        let mut p = sc.p0;
        let mut v = sc.v0;
        for j in 0..ocp.m - 1 {
            let dt = c * x[ocp.it(ocp.stage_of(j))];
            let a = Vec2::new(x[ocp.ia(j, Axis::X)], x[ocp.ia(j, Axis::Y)]);
            p = p + v.scale(dt) + a.scale(0.5 * dt * dt);
            v = v + a.scale(dt);
            for ax in Axis::BOTH {
                assert!((p.axis(ax) - x[ocp.ip(j + 1, ax)]).abs() < 1e-6);
                assert!((v.axis(ax) - x[ocp.iv(j + 1, ax)]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn violation_counter_counts() {
        let sc = straight_scenario();
        let seq = corridors_for(&sc).unwrap();
        let (traj, _) = solve_baseline(&seq, &sc, DEFAULT_GRID).unwrap();
        assert_eq!(intersample_violation_count(&traj, &seq, &sc, 100.0), 0);
        // a trajectory leaving the map violates everywhere
        let stray = Trajectory::from_primitives(vec![Primitive2D {
            x: Primitive1D {
                alpha_start: 1.0,
                alpha_end: 0.0,
                p_start: 10.0,
                v_start: 0.0,
                tau: [1.0, 0.0, 0.0],
                a_max: 2.0,
            },
            y: Primitive1D::rest(10.0, 2.0),
        }]);
        assert!(intersample_violation_count(&stray, &seq, &sc, 100.0) > 0);
    }
}
