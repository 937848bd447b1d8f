//! Plan orchestration: corridor construction, the analytic fast path,
//! heuristic primitive selection, the solve with its extremum-repair loop,
//! and the outer suboptimal-primitive flip loop.

use std::time::Instant;

use serde::Serialize;

use crate::corridors::{corridors_for, CorridorSequence};
use crate::error::Error;
use crate::geom::{Axis, Rect};
use crate::heuristics::{self, PrimitiveSelection};
use crate::kinematics::{analytic_plan_2d, ExtremumKind, Trajectory};
use crate::nlp::{assemble, initial_guess, solve_nlp, NlpProblem, Repair, RepairPhase};
use crate::solver::SolveOptions;
use crate::world::Scenario;

/// Both acceleration phases adjacent to a waypoint must be shorter than
/// this (in both axes) for the pass-through to count as a straight coast.
pub const COAST_EPS: f64 = 1e-4;
/// Maximum extremum-repair rounds per solve.
pub const MAX_REPAIR_ROUNDS: usize = 5;
/// Maximum sign-flip rounds.
pub const MAX_FLIP_ROUNDS: usize = 3;
/// Maximum alternative interior-waypoint sign assignments tried when the
/// solve from the heuristic selection fails.
pub const MAX_SIGN_RETRIES: usize = 16;

const MEMBERSHIP_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PlanStatus {
    Solved,
    SolvedAnalytic,
    SolverFailure,
    NoPath,
    DegenerateInput,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanReport {
    pub status: PlanStatus,
    /// Corridor construction, selection, and all solves (seconds).
    pub t_solver: f64,
    /// End-to-end planning time (seconds).
    pub t_total: f64,
    /// Duration of the returned trajectory (seconds).
    pub t_move: f64,
    pub n_corridors: usize,
    pub n_repair_rounds: usize,
    pub n_flip_rounds: usize,
    /// Moving time before the first accepted sign flip, when one happened.
    pub t_move_pre_flip: Option<f64>,
}

/// Result of [`plan`]; failures carry a report with the failure status and
/// whatever artifacts were produced before the failure.
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub trajectory: Option<Trajectory>,
    pub report: PlanReport,
    pub corridors: Option<CorridorSequence>,
    pub selection: Option<PrimitiveSelection>,
}

impl PlanOutcome {
    pub fn is_solved(&self) -> bool {
        matches!(
            self.report.status,
            PlanStatus::Solved | PlanStatus::SolvedAnalytic
        )
    }
}

fn report(status: PlanStatus) -> PlanReport {
    PlanReport {
        status,
        t_solver: 0.0,
        t_total: 0.0,
        t_move: 0.0,
        n_corridors: 0,
        n_repair_rounds: 0,
        n_flip_rounds: 0,
        t_move_pre_flip: None,
    }
}

fn failure(status: PlanStatus, t_total: f64, t_solver: f64, n_corridors: usize) -> PlanOutcome {
    PlanOutcome {
        trajectory: None,
        report: PlanReport {
            status,
            t_total,
            t_solver,
            n_corridors,
            ..report(status)
        },
        corridors: None,
        selection: None,
    }
}

/// Corridor membership of an entire trajectory: uniform samples at
/// `rate_hz` plus every critical point (piece boundaries and per-axis
/// extrema), which makes the test exact for piecewise-parabolic motion.
pub fn trajectory_in_corridors(
    traj: &Trajectory,
    sequence: &CorridorSequence,
    scenario: &Scenario,
    rate_hz: f64,
) -> bool {
    let half = scenario.vehicle.half_extents();
    let admits = |t: f64| {
        let (p, _, _) = traj.eval(t);
        sequence.admits(p, half, MEMBERSHIP_TOL)
    };
    traj.sample(rate_hz).iter().all(|s| admits(s.t)) && traj.critical_times().iter().all(|&t| admits(t))
}

/// Whether the vehicle could stop inside `bounds` (a box on the vehicle
/// center) from `(p, v)`: per-axis braking distance `v^2 / (2 a_max)`
/// against the margin in the velocity's direction.
pub fn emergency_feasibility_note(scenario: &Scenario, bounds: &Rect) -> bool {
    let (p, v) = (scenario.p0, scenario.v0);
    let a = scenario.vehicle.a_max;
    Axis::BOTH.into_iter().all(|ax| {
        let brake = v.axis(ax) * v.axis(ax) / (2.0 * a);
        let (lo, hi) = bounds.interval(ax);
        if v.axis(ax) > 0.0 {
            p.axis(ax) + brake <= hi + 1e-12
        } else if v.axis(ax) < 0.0 {
            p.axis(ax) - brake >= lo - 1e-12
        } else {
            true
        }
    })
}

/// Per-axis extrema of the solved trajectory that leave their primitive's
/// corridor box. Coast-phase extrema are excluded: the coast endpoints are
/// already hard constraints of the program.
fn violating_extrema(problem: &NlpProblem, x: &[f64]) -> Vec<Repair> {
    let traj = problem.trajectory(x);
    let mut out = Vec::new();
    for (k, piece) in traj.pieces().iter().enumerate() {
        let boxk = problem.corridor_box(k);
        for ax in Axis::BOTH {
            for ep in piece.primitive.axis(ax).extreme_points() {
                let phase = match ep.kind {
                    ExtremumKind::FirstPhase => RepairPhase::First,
                    ExtremumKind::ThirdPhase => RepairPhase::Third,
                    ExtremumKind::StationaryCoast => continue,
                };
                let (lo, hi) = boxk.interval(ax);
                if ep.position < lo - MEMBERSHIP_TOL || ep.position > hi + MEMBERSHIP_TOL {
                    out.push(Repair { k, axis: ax, phase });
                }
            }
        }
    }
    out
}

/// Solve with up to [`MAX_REPAIR_ROUNDS`] extremum-repair rounds. Returns
/// the final variable vector; `Err` on solver failure, repair-cap
/// exhaustion, or a round that fails to reduce the violation count.
fn solve_with_repairs(
    problem: &mut NlpProblem,
    mut guess: Vec<f64>,
    opts: &SolveOptions,
    t_solver: &mut f64,
    repair_rounds: &mut usize,
) -> crate::error::Result<Vec<f64>> {
    let mut opts = *opts;
    let mut last_count = usize::MAX;
    loop {
        let (x, stats) = solve_nlp(problem, &guess, &opts)?;
        *t_solver += stats.wall_time;
        let violations = violating_extrema(problem, &x);
        if violations.is_empty() {
            return Ok(x);
        }
        if *repair_rounds >= MAX_REPAIR_ROUNDS || violations.len() >= last_count {
            return Err(Error::SolverDiverged);
        }
        last_count = violations.len();
        *repair_rounds += 1;
        let fresh: Vec<Repair> = violations
            .into_iter()
            .filter(|r| !problem.repairs().contains(r))
            .collect();
        if fresh.is_empty() {
            // constraints exist but are violated beyond tolerance: give up
            return Err(Error::SolverDiverged);
        }
        problem.add_extremum_constraints(&fresh);
        guess = x;
        opts.mu0 = 1e-3; // warm start near the previous solution
    }
}

/// Interior waypoint the vehicle coasts straight through: both adjacent
/// acceleration phases shorter than [`COAST_EPS`] in both axes.
fn coast_through_waypoint(problem: &NlpProblem, x: &[f64], skip: &[usize]) -> Option<usize> {
    let traj = problem.trajectory(x);
    let pieces = traj.pieces();
    for k in 1..pieces.len() {
        if skip.contains(&k) {
            continue;
        }
        let coasting = Axis::BOTH.into_iter().all(|ax| {
            pieces[k - 1].primitive.axis(ax).tau[2] < COAST_EPS
                && pieces[k].primitive.axis(ax).tau[0] < COAST_EPS
        });
        if coasting {
            return Some(k);
        }
    }
    None
}

/// Plan a near time-optimal trajectory through `scenario`. Never panics on
/// planner-level failures; the outcome's report carries the status.
pub fn plan(scenario: &Scenario) -> PlanOutcome {
    let t0 = Instant::now();

    if scenario.validate().is_err() {
        return failure(PlanStatus::DegenerateInput, t0.elapsed().as_secs_f64(), 0.0, 0);
    }

    let solve_clock = Instant::now();
    let sequence = match corridors_for(scenario) {
        Ok(s) => s,
        Err(_) => {
            let dt = t0.elapsed().as_secs_f64();
            return failure(PlanStatus::NoPath, dt, dt, 0);
        }
    };
    let n_corridors = sequence.len();

    // analytic fast path: the unconstrained 2-axis profile, accepted when
    // it stays inside the corridors
    let analytic = analytic_plan_2d(scenario);
    if trajectory_in_corridors(&analytic, &sequence, scenario, 100.0) {
        let t_solver = solve_clock.elapsed().as_secs_f64();
        let t_move = analytic.t_move();
        return PlanOutcome {
            trajectory: Some(analytic),
            report: PlanReport {
                status: PlanStatus::SolvedAnalytic,
                t_solver,
                t_total: t0.elapsed().as_secs_f64(),
                t_move,
                n_corridors,
                n_repair_rounds: 0,
                n_flip_rounds: 0,
                t_move_pre_flip: None,
            },
            corridors: Some(sequence),
            selection: None,
        };
    }

    let mut selection = match heuristics::select(&sequence, scenario) {
        Ok(s) => s,
        Err(_) => {
            let dt = solve_clock.elapsed().as_secs_f64();
            let mut out =
                failure(PlanStatus::SolverFailure, t0.elapsed().as_secs_f64(), dt, n_corridors);
            out.corridors = Some(sequence);
            return out;
        }
    };

    let mut t_solver = 0.0;
    let mut repair_rounds = 0;
    let mut flip_rounds = 0;
    let mut t_move_pre_flip = None;

    let build = |sel: &PrimitiveSelection, repairs: &[Repair]| {
        assemble(sel, &sequence, scenario).map(|mut p| {
            p.add_extremum_constraints(repairs);
            p
        })
    };

    let mut problem = match build(&selection, &[]) {
        Ok(p) => p,
        Err(_) => {
            let dt = solve_clock.elapsed().as_secs_f64();
            let mut out = failure(
                PlanStatus::SolverFailure,
                t0.elapsed().as_secs_f64(),
                dt + t_solver,
                n_corridors,
            );
            out.corridors = Some(sequence);
            return out;
        }
    };
    let guess = initial_guess(&problem);
    // successful solves converge well within this budget; a tighter cap
    // keeps infeasible sign choices from burning the full default budget
    let opts = SolveOptions {
        max_iter: 500,
        ..SolveOptions::default()
    };
    let mut x = match solve_with_repairs(&mut problem, guess, &opts, &mut t_solver, &mut repair_rounds) {
        Ok(x) => x,
        Err(_) => {
            // the heuristic sign choice can make the program infeasible;
            // retry with interior-waypoint signs flipped, fewest flips
            // first, keeping the fastest solution within the first flip
            // count that yields any
            let n = selection.num_primitives();
            let bits = (2 * (n - 1)).min(20);
            let mut masks: Vec<u64> = (1..(1u64 << bits)).collect();
            masks.sort_by_key(|m| (m.count_ones(), *m));
            let retry_opts = SolveOptions { max_iter: 400, ..opts };
            let mut rescued: Option<(PrimitiveSelection, NlpProblem, Vec<f64>, usize)> = None;
            let mut level = 0;
            let mut successes = 0;
            for mask in masks.into_iter().take(MAX_SIGN_RETRIES) {
                if successes >= 2 || (rescued.is_some() && mask.count_ones() > level) {
                    break;
                }
                level = mask.count_ones();
                let mut flipped = selection.clone();
                for k in 1..n {
                    let b = 2 * (k - 1);
                    if mask & (1 << b) != 0 {
                        flipped.signs[k].x = -flipped.signs[k].x;
                    }
                    if mask & (1 << (b + 1)) != 0 {
                        flipped.signs[k].y = -flipped.signs[k].y;
                    }
                }
                let Ok(mut p) = build(&flipped, &[]) else {
                    continue;
                };
                let mut rounds = 0;
                let g = initial_guess(&p);
                let dbg_t0 = Instant::now();
                let attempt = solve_with_repairs(&mut p, g, &retry_opts, &mut t_solver, &mut rounds);
                if std::env::var("CP_DEBUG").is_ok() {
                    eprintln!(
                        "  mask {mask}: {} in {:.3}s",
                        if attempt.is_ok() { "ok" } else { "fail" },
                        dbg_t0.elapsed().as_secs_f64()
                    );
                }
                if let Ok(x2) = attempt {
                    successes += 1;
                    let better = rescued
                        .as_ref()
                        .map(|(_, bp, bx, _)| p.trajectory(&x2).t_move() < bp.trajectory(bx).t_move())
                        .unwrap_or(true);
                    if better {
                        rescued = Some((flipped, p, x2, rounds));
                    }
                }
            }
            match rescued {
                Some((sel, p, x2, rounds)) => {
                    selection = sel;
                    problem = p;
                    repair_rounds = rounds;
                    x2
                }
                None => {
                    let dt = solve_clock.elapsed().as_secs_f64() - t_solver;
                    let mut out = failure(
                        PlanStatus::SolverFailure,
                        t0.elapsed().as_secs_f64(),
                        dt + t_solver,
                        n_corridors,
                    );
                    out.corridors = Some(sequence.clone());
                    return out;
                }
            }
        }
    };

    // flip loop: straight coasts through interior waypoints mark
    // suboptimal sign choices; flipping and re-solving warm-started can
    // only be accepted when it strictly reduces the moving time
    let mut rejected: Vec<usize> = Vec::new();
    while flip_rounds < MAX_FLIP_ROUNDS {
        let Some(k) = coast_through_waypoint(&problem, &x, &rejected) else {
            break;
        };
        flip_rounds += 1;
        let t_before = problem.trajectory(&x).t_move();
        let mut flipped = selection.clone();
        flipped.signs[k] = flipped.signs[k].scale(-1.0);
        let attempt = build(&flipped, problem.repairs()).and_then(|mut p| {
            let warm = SolveOptions { mu0: 1e-3, ..opts };
            let mut rounds = repair_rounds;
            let x2 = solve_with_repairs(&mut p, x.clone(), &warm, &mut t_solver, &mut rounds)?;
            Ok((p, x2, rounds))
        });
        match attempt {
            Ok((p, x2, rounds)) if p.trajectory(&x2).t_move() < t_before - 1e-9 => {
                t_move_pre_flip.get_or_insert(t_before);
                selection = flipped;
                problem = p;
                x = x2;
                repair_rounds = rounds;
                rejected.clear();
            }
            // the pre-flip solution is still feasible: keep it
            _ => rejected.push(k),
        }
    }

    let trajectory = problem.trajectory(&x);
    let t_move = trajectory.t_move();
    PlanOutcome {
        trajectory: Some(trajectory),
        report: PlanReport {
            status: PlanStatus::Solved,
            t_solver: solve_clock.elapsed().as_secs_f64(),
            t_total: t0.elapsed().as_secs_f64(),
            t_move,
            n_corridors,
            n_repair_rounds: repair_rounds,
            n_flip_rounds: flip_rounds,
            t_move_pre_flip,
        },
        corridors: Some(sequence),
        selection: Some(selection),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;
    use crate::kinematics::min_time_1d;
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

    fn empty_map() -> String {
        let mut s = String::from("cells 6 6 0.5\n");
        for _ in 0..6 {
            s.push_str("......\n");
        }
        s
    }

    fn l_turn_map() -> &'static str {
        "cells 6 6 0.5\n####..\n####..\n####..\n####..\n......\n......\n"
    }

    #[test]
    fn empty_map_takes_analytic_fast_path() {
        let sc = scenario(&empty_map(), Vec2::new(0.5, 0.5), Vec2::new(2.5, 1.0));
        let out = plan(&sc);
        assert_eq!(out.report.status, PlanStatus::SolvedAnalytic);
        let v = &sc.vehicle;
        let tx = min_time_1d(sc.p0.x, sc.pn.x, 0.0, v.v_max, v.a_max).total_time();
        let ty = min_time_1d(sc.p0.y, sc.pn.y, 0.0, v.v_max, v.a_max).total_time();
        assert!((out.report.t_move - tx.max(ty)).abs() < 1e-12);
        let traj = out.trajectory.unwrap();
        let (pe, ve, _) = traj.eval(traj.t_move());
        assert!((pe - sc.pn).norm() < 1e-9);
        assert!(ve.norm() < 1e-9);
    }

    #[test]
    fn l_turn_solves_with_full_pipeline() {
        let sc = scenario(l_turn_map(), Vec2::new(0.5, 0.5), Vec2::new(2.5, 2.75));
        let out = plan(&sc);
        assert_eq!(out.report.status, PlanStatus::Solved);
        assert_eq!(out.report.n_corridors, 2);
        let traj = out.trajectory.unwrap();
        let (pe, ve, _) = traj.eval(traj.t_move());
        assert!((pe - sc.pn).norm() < 1e-5);
        assert!(ve.norm() < 1e-5);
        // collision-free at 100 Hz plus extrema
        let seq = out.corridors.unwrap();
        assert!(trajectory_in_corridors(&traj, &seq, &sc, 100.0));
        assert!(out.report.t_solver <= out.report.t_total);
    }

    #[test]
    fn walled_off_goal_reports_no_path() {
        let map = "cells 5 5 0.5\n.....\n.....\n#####\n.....\n.....\n";
        let sc = scenario(map, Vec2::new(0.5, 0.5), Vec2::new(2.0, 2.0));
        let out = plan(&sc);
        assert_eq!(out.report.status, PlanStatus::NoPath);
        assert!(out.trajectory.is_none());
    }

    #[test]
    fn blocked_start_is_degenerate_input() {
        // row 0 is printed last, so the obstacle sits under the start
        let map = "cells 3 3 0.5\n...\n...\n#..\n";
        let sc = scenario(map, Vec2::new(0.25, 0.25), Vec2::new(1.25, 1.25));
        let out = plan(&sc);
        assert_eq!(out.report.status, PlanStatus::DegenerateInput);
    }

    #[test]
    fn already_at_goal_is_stationary() {
        let sc = scenario(&empty_map(), Vec2::new(1.5, 1.5), Vec2::new(1.5, 1.5));
        let out = plan(&sc);
        assert_eq!(out.report.status, PlanStatus::SolvedAnalytic);
        assert_eq!(out.report.t_move, 0.0);
    }

    #[test]
    fn emergency_note_brake_distance_boundary() {
        let mut sc = scenario(&empty_map(), Vec2::new(0.5, 0.5), Vec2::new(2.5, 0.5));
        sc.v0 = Vec2::new(1.0, 0.0);
        // braking distance 1/(2*2) = 0.25
        let tight = Rect::from_bounds(0.0, 0.75, 0.0, 1.0);
        assert!(emergency_feasibility_note(&sc, &tight));
        let tighter = Rect::from_bounds(0.0, 0.70, 0.0, 1.0);
        assert!(!emergency_feasibility_note(&sc, &tighter));
        sc.v0 = Vec2::new(0.0, 0.0);
        assert!(emergency_feasibility_note(&sc, &tighter));
    }

    #[test]
    fn deterministic_replan_bitwise_identical() {
        let sc = scenario(l_turn_map(), Vec2::new(0.5, 0.5), Vec2::new(2.5, 2.75));
        let a = plan(&sc);
        let b = plan(&sc);
        let sa = serde_json::to_string(&a.trajectory.unwrap().pieces()).unwrap();
        let sb = serde_json::to_string(&b.trajectory.unwrap().pieces()).unwrap();
        assert_eq!(sa, sb);
        assert_eq!(a.report.t_move, b.report.t_move);
    }
}
