//! Waypoint and acceleration-sign selection from corridor geometry.
//!
//! Interior waypoints are picked from the corners of the (vehicle-shrunken)
//! corridor overlaps, pulled toward the inside of each turn. Acceleration
//! signs follow from the waypoint layout, and a straight-line check may
//! flip signs and release waypoints for the optimizer to move.

use crate::corridors::CorridorSequence;
use crate::error::{Error, Result};
use crate::geom::{Axis, Rect, Vec2};
use crate::kinematics::min_time_1d;
use crate::world::Scenario;

/// Scale placing the turn-attractor point well outside the environment.
pub const MU: f64 = 20.0;

/// Waypoints, per-axis acceleration signs, movable-waypoint freedom, and the
/// free-direction designation at both trajectory ends.
#[derive(Debug, Clone)]
pub struct PrimitiveSelection {
    /// `p_0..p_n`; one more entry than there are corridors.
    pub waypoints: Vec<Vec2>,
    /// `alpha_0..alpha_n`, components in {-1, +1}.
    pub signs: Vec<Vec2>,
    /// Bounds box on the offset `delta_k` of each released interior
    /// waypoint (contains 0); `None` for fixed waypoints and both ends.
    pub movable: Vec<Option<Rect>>,
    /// Axis whose initial acceleration multiplier the optimizer may scale.
    pub free_axis_start: Axis,
    /// Axis whose final acceleration multiplier the optimizer may scale.
    pub free_axis_end: Axis,
}

impl PrimitiveSelection {
    pub fn num_primitives(&self) -> usize {
        self.waypoints.len() - 1
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "waypoints": self.waypoints,
            "signs": self.signs,
            "movable": self
                .movable
                .iter()
                .map(|m| m.as_ref().map(|r| {
                    serde_json::json!({"min": r.min, "max": r.max})
                }))
                .collect::<Vec<_>>(),
            "free_axis_start": format!("{:?}", self.free_axis_start),
            "free_axis_end": format!("{:?}", self.free_axis_end),
        })
    }
}

fn sign_or_plus(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn sign_vec(v: Vec2) -> Vec2 {
    Vec2::new(sign_or_plus(v.x), sign_or_plus(v.y))
}

/// The overlap between corridors `k-1` and `k`, shrunk by the vehicle's
/// half extents so that any contained point is an admissible waypoint.
pub fn shrunken_overlap(sequence: &CorridorSequence, k: usize, scenario: &Scenario) -> Rect {
    sequence.overlap(k).shrink(scenario.vehicle.half_extents())
}

/// Candidate waypoints inside the shrunken overlap: its four corners, with
/// corners deep inside either adjacent corridor filtered out. Falls back to
/// the unfiltered corners when the filter would leave nothing.
pub fn candidate_waypoints(
    shrunk: &Rect,
    adjacent: [&Rect; 2],
    scenario: &Scenario,
) -> Result<Vec<Vec2>> {
    if shrunk.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let half = scenario.vehicle.half_extents();
    let corners = shrunk.corners();
    let deep_inside = |q: Vec2, rect: &Rect| -> bool {
        let dx = (q.x - rect.min.x).abs().min((q.x - rect.max.x).abs());
        let dy = (q.y - rect.min.y).abs().min((q.y - rect.max.y).abs());
        dx > half.x && dy > half.y
    };
    let filtered: Vec<Vec2> = corners
        .iter()
        .copied()
        .filter(|&q| !adjacent.iter().any(|rect| deep_inside(q, rect)))
        .collect();
    if filtered.is_empty() {
        Ok(corners.to_vec())
    } else {
        Ok(filtered)
    }
}

/// Pick the candidate nearest to the turn attractor
/// `i_k = center(O_{k-1,k}) + mu * v`, where `v` is the unit perpendicular of
/// the line from the previous waypoint to the next overlap center, signed to
/// point from the current overlap center toward that line.
fn pick_waypoint(
    candidates: &[Vec2],
    overlap_center: Vec2,
    prev: Vec2,
    next_anchor: Vec2,
    overlap: &Rect,
    mu: f64,
) -> Vec2 {
    let dir = next_anchor - prev;
    let norm = dir.norm();
    if norm >= 1e-12 {
        let u = dir.perp().scale(1.0 / norm);
        let side = u.dot(overlap_center - prev);
        if side.abs() >= 1e-12 {
            let v = u.scale(-sign_or_plus(side));
            let target = overlap_center + v.scale(mu);
            debug_assert!(!overlap.contains(target, 0.0), "attractor inside overlap");
            return nearest(candidates, target);
        }
    }
    // collinear: no turn, any overlap point works; prefer the centered one
    nearest(candidates, overlap_center)
}

fn nearest(candidates: &[Vec2], target: Vec2) -> Vec2 {
    let mut best = candidates[0];
    let mut best_d = (candidates[0] - target).norm();
    for &q in &candidates[1..] {
        let d = (q - target).norm();
        if d < best_d - 1e-12 {
            best = q;
            best_d = d;
        }
    }
    best
}

/// Interior waypoints `p_1..p_{n-1}` for an `n`-corridor sequence.
pub fn select_waypoints(
    sequence: &CorridorSequence,
    scenario: &Scenario,
    mu: f64,
) -> Result<Vec<Vec2>> {
    let n = sequence.len();
    let mut interior = Vec::with_capacity(n.saturating_sub(1));
    let mut prev = scenario.p0;
    for k in 1..n {
        let shrunk = shrunken_overlap(sequence, k, scenario);
        let candidates =
            candidate_waypoints(&shrunk, [sequence.rect(k - 1), sequence.rect(k)], scenario)?;
        let next_anchor = if k + 1 < n {
            sequence.overlap(k + 1).center()
        } else {
            scenario.pn
        };
        let p = pick_waypoint(
            &candidates,
            shrunk.center(),
            prev,
            next_anchor,
            &sequence.overlap(k),
            mu,
        );
        interior.push(p);
        prev = p;
    }
    Ok(interior)
}

/// Per-axis acceleration signs for every waypoint.
pub fn select_signs(
    waypoints: &[Vec2],
    sequence: &CorridorSequence,
    scenario: &Scenario,
) -> Vec<Vec2> {
    let n = waypoints.len() - 1;
    let mut signs = Vec::with_capacity(n + 1);
    signs.push(sign_vec(waypoints[1] - waypoints[0]));
    for k in 1..n {
        let center = shrunken_overlap(sequence, k, scenario).center();
        signs.push(sign_vec(waypoints[k] - center));
    }
    signs.push(sign_vec(waypoints[n - 1] - waypoints[n]));
    signs
}

/// For each interior waypoint, if the vehicle could drive straight from its
/// predecessor to its successor without leaving the corridors, flip the
/// waypoint's signs and release it (the straight line hints that stopping by
/// the corner is unnecessary, and the optimizer may shift the waypoint).
pub fn straight_line_modification(
    selection: &mut PrimitiveSelection,
    sequence: &CorridorSequence,
    scenario: &Scenario,
) {
    let n = selection.num_primitives();
    let half = scenario.vehicle.half_extents();
    let inside_union = |q: Vec2| -> bool {
        sequence.rects().iter().any(|r| r.contains(q, 1e-9))
    };
    for k in 1..n {
        let a = selection.waypoints[k - 1];
        let b = selection.waypoints[k + 1];
        let samples = 200;
        let mut ok = true;
        'outer: for i in 0..samples {
            let s = i as f64 / (samples - 1) as f64;
            let c = a + (b - a).scale(s);
            for corner in Rect::new(c - half, c + half).corners() {
                if !inside_union(corner) {
                    ok = false;
                    break 'outer;
                }
            }
        }
        if ok {
            selection.signs[k] = -selection.signs[k];
            let shrunk = shrunken_overlap(sequence, k, scenario);
            let p = selection.waypoints[k];
            selection.movable[k] = Some(Rect::new(shrunk.min - p, shrunk.max - p));
        }
    }
}

/// The axis that finishes its unconstrained point-to-point motion sooner is
/// the free direction: its acceleration multiplier is released to the
/// optimizer while the slower (bottleneck) axis keeps the heuristic sign.
pub fn free_axis(p_from: Vec2, p_to: Vec2, v0: Vec2, scenario: &Scenario) -> Axis {
    let v = &scenario.vehicle;
    let tx = min_time_1d(p_from.x, p_to.x, v0.x, v.v_max, v.a_max).total_time();
    let ty = min_time_1d(p_from.y, p_to.y, v0.y, v.v_max, v.a_max).total_time();
    if tx <= ty {
        Axis::X
    } else {
        Axis::Y
    }
}

/// Full selection pipeline for a corridor sequence.
pub fn select(sequence: &CorridorSequence, scenario: &Scenario) -> Result<PrimitiveSelection> {
    let n = sequence.len();
    if n == 0 {
        return Err(Error::DegenerateSequence);
    }
    let interior = select_waypoints(sequence, scenario, MU)?;
    let mut waypoints = Vec::with_capacity(n + 1);
    waypoints.push(scenario.p0);
    waypoints.extend(interior);
    waypoints.push(scenario.pn);
    let signs = select_signs(&waypoints, sequence, scenario);
    let mut selection = PrimitiveSelection {
        free_axis_start: free_axis(waypoints[0], waypoints[1], scenario.v0, scenario),
        free_axis_end: free_axis(waypoints[n - 1], waypoints[n], Vec2::new(0.0, 0.0), scenario),
        movable: vec![None; n + 1],
        waypoints,
        signs,
    };
    straight_line_modification(&mut selection, sequence, scenario);
    Ok(selection)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corridors::corridors_for;
    use crate::world::{load_map, Vehicle};

    fn l_turn_scenario() -> Scenario {
        // 3 m x 4 m room with the lower-left 2x3 m block walled off:
        // corridor 0 runs along the bottom, corridor 1 up the right side
        let grid = load_map(
            "cells 6 6 0.5\n####..\n####..\n####..\n####..\n......\n......\n",
        )
        .unwrap();
        Scenario {
            grid,
            vehicle: Vehicle::new(0.5, 0.5, 1.0, 2.0).unwrap(),
            p0: Vec2::new(0.5, 0.5),
            pn: Vec2::new(2.5, 2.75),
            v0: Vec2::new(0.0, 0.0),
        }
    }

    #[test]
    fn l_turn_waypoint_and_signs() {
        let scenario = l_turn_scenario();
        let seq = corridors_for(&scenario).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(*seq.rect(0), Rect::from_bounds(0.0, 3.0, 0.0, 1.0));
        assert_eq!(*seq.rect(1), Rect::from_bounds(2.0, 3.0, 0.0, 3.0));

        let sel = select(&seq, &scenario).unwrap();
        assert_eq!(sel.waypoints.len(), 3);
        let p1 = sel.waypoints[1];
        assert!((p1.x - 2.25).abs() < 1e-12 && (p1.y - 0.75).abs() < 1e-12);
        assert_eq!(sel.signs[1], Vec2::new(-1.0, 1.0));
    }

    #[test]
    fn selection_invariant_to_mu() {
        let scenario = l_turn_scenario();
        let seq = corridors_for(&scenario).unwrap();
        let a = select_waypoints(&seq, &scenario, 20.0).unwrap();
        let b = select_waypoints(&seq, &scenario, 200.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mirrored_l_turn_selects_mirrored_corner() {
        // mirror the L-turn about the vertical center line x = 1.5
        let grid = load_map(
            "cells 6 6 0.5\n..####\n..####\n..####\n..####\n......\n......\n",
        )
        .unwrap();
        let scenario = Scenario {
            grid,
            vehicle: Vehicle::new(0.5, 0.5, 1.0, 2.0).unwrap(),
            p0: Vec2::new(2.5, 0.5),
            pn: Vec2::new(0.5, 2.75),
            v0: Vec2::new(0.0, 0.0),
        };
        let seq = corridors_for(&scenario).unwrap();
        let sel = select(&seq, &scenario).unwrap();
        let p1 = sel.waypoints[1];
        assert!((p1.x - 0.75).abs() < 1e-12 && (p1.y - 0.75).abs() < 1e-12);
        assert_eq!(sel.signs[1], Vec2::new(1.0, 1.0));
    }

    #[test]
    fn candidate_corners_shrunken() {
        let scenario = l_turn_scenario();
        let overlap = Rect::from_bounds(2.0, 3.0, 0.0, 1.0);
        let shrunk = overlap.shrink(scenario.vehicle.half_extents());
        let cands = candidate_waypoints(
            &shrunk,
            [
                &Rect::from_bounds(0.0, 3.0, 0.0, 1.0),
                &Rect::from_bounds(2.0, 3.0, 0.0, 3.0),
            ],
            &scenario,
        )
        .unwrap();
        let expect = [
            Vec2::new(2.25, 0.25),
            Vec2::new(2.75, 0.25),
            Vec2::new(2.25, 0.75),
            Vec2::new(2.75, 0.75),
        ];
        assert_eq!(cands, expect.to_vec());
    }

    #[test]
    fn robustness_filter_removes_deep_corner() {
        // huge adjacent corridors so that interior candidates sit far from
        // every edge of one of them
        let scenario = l_turn_scenario();
        let shrunk = Rect::from_bounds(4.0, 5.0, 4.0, 5.0);
        let big = Rect::from_bounds(0.0, 10.0, 0.0, 10.0);
        let narrow = Rect::from_bounds(4.0, 5.0, 0.0, 10.0);
        let cands = candidate_waypoints(&shrunk, [&big, &narrow], &scenario).unwrap();
        // all four corners are > W/2 from every edge of `big`, so the filter
        // removes everything and the fallback restores the corners
        assert_eq!(cands.len(), 4);

        let moderate = Rect::from_bounds(3.8, 5.2, 0.0, 10.0);
        let cands = candidate_waypoints(&shrunk, [&moderate, &narrow], &scenario).unwrap();
        assert_eq!(cands.len(), 4, "near-edge corners survive");
    }

    #[test]
    fn straight_line_flip_in_open_space() {
        // two corridors in a fully open room: the straight line is free, so
        // the interior waypoint should be released and its signs flipped
        let grid = load_map("cells 4 4 0.5\n....\n....\n....\n....\n").unwrap();
        let scenario = Scenario {
            grid,
            vehicle: Vehicle::new(0.4, 0.4, 1.0, 2.0).unwrap(),
            p0: Vec2::new(0.3, 0.3),
            pn: Vec2::new(1.7, 1.7),
            v0: Vec2::new(0.0, 0.0),
        };
        let seq = corridors_for(&scenario).unwrap();
        if seq.len() < 2 {
            return; // corridor growth may merge everything into one box
        }
        let sel = select(&seq, &scenario).unwrap();
        for k in 1..sel.num_primitives() {
            let bounds = sel.movable[k].expect("open space releases waypoints");
            assert!(bounds.contains(Vec2::new(0.0, 0.0), 1e-12));
        }
    }

    #[test]
    fn zero_tie_sign_is_positive() {
        assert_eq!(sign_vec(Vec2::new(0.0, -0.0)), Vec2::new(1.0, 1.0));
    }
}
