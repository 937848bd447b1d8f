//! Closed-form double-integrator math: 1D time-optimal point-to-point
//! profiles, the bang-coast-bang primitive, exact integration, extreme-point
//! analysis and trajectory sampling.

use crate::geom::{Axis, Vec2};
use crate::world::Scenario;
use serde::{Deserialize, Serialize};

/// One-dimensional bang-coast-bang primitive. Acceleration is
/// `alpha_start * a_max` during `[0, tau[0])`, zero during the coast and
/// `alpha_end * a_max` during the final phase. The multipliers lie in
/// [-1, 1]; they are +/-1 except for free-direction end primitives.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Primitive1D {
    pub alpha_start: f64,
    pub alpha_end: f64,
    pub p_start: f64,
    pub v_start: f64,
    pub tau: [f64; 3],
    pub a_max: f64,
}

impl Primitive1D {
    pub fn rest(p: f64, a_max: f64) -> Primitive1D {
        Primitive1D {
            alpha_start: 1.0,
            alpha_end: -1.0,
            p_start: p,
            v_start: 0.0,
            tau: [0.0; 3],
            a_max,
        }
    }

    pub fn total_time(&self) -> f64 {
        self.tau[0] + self.tau[1] + self.tau[2]
    }

    /// State after the first acceleration phase.
    pub fn coast_start(&self) -> (f64, f64) {
        let a = self.alpha_start * self.a_max;
        let p = self.p_start + self.v_start * self.tau[0] + 0.5 * a * self.tau[0] * self.tau[0];
        let v = self.v_start + a * self.tau[0];
        (p, v)
    }

    /// State at the end of the coast phase.
    pub fn coast_end(&self) -> (f64, f64) {
        let (p1, v1) = self.coast_start();
        (p1 + v1 * self.tau[1], v1)
    }

    /// Exact end state from the closed-form integral.
    pub fn end_state(&self) -> (f64, f64) {
        let a = self.a_max;
        let [t0, t1, t2] = self.tau;
        let total = t0 + t1 + t2;
        let p = self.p_start
            + self.v_start * total
            + a * self.alpha_start * (0.5 * t0 * t0 + t0 * (t1 + t2))
            + 0.5 * a * self.alpha_end * t2 * t2;
        let v = self.v_start + a * (self.alpha_start * t0 + self.alpha_end * t2);
        (p, v)
    }

    /// (position, velocity, acceleration) at `t`, clamped to `[0, T]`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let t = t.clamp(0.0, self.total_time());
        let a0 = self.alpha_start * self.a_max;
        if t < self.tau[0] {
            let p = self.p_start + self.v_start * t + 0.5 * a0 * t * t;
            return (p, self.v_start + a0 * t, a0);
        }
        let (p1, v1) = self.coast_start();
        let tc = t - self.tau[0];
        if tc < self.tau[1] {
            return (p1 + v1 * tc, v1, 0.0);
        }
        let (p2, v2) = self.coast_end();
        let a2 = self.alpha_end * self.a_max;
        let td = tc - self.tau[1];
        let p = p2 + v2 * td + 0.5 * a2 * td * td;
        (p, v2 + a2 * td, a2)
    }

    /// Split at `t` into a prefix of duration `t` and a suffix starting at
    /// the state reached at `t`.
    pub fn split_at(&self, t: f64) -> (Primitive1D, Primitive1D) {
        let t = t.clamp(0.0, self.total_time());
        let (p, v, _) = self.eval(t);
        let (head_tau, tail_tau) = if t <= self.tau[0] {
            ([t, 0.0, 0.0], [self.tau[0] - t, self.tau[1], self.tau[2]])
        } else if t <= self.tau[0] + self.tau[1] {
            let tc = t - self.tau[0];
            ([self.tau[0], tc, 0.0], [0.0, self.tau[1] - tc, self.tau[2]])
        } else {
            let td = t - self.tau[0] - self.tau[1];
            (
                [self.tau[0], self.tau[1], td],
                [0.0, 0.0, self.tau[2] - td],
            )
        };
        let head = Primitive1D {
            tau: head_tau,
            ..*self
        };
        let tail = Primitive1D {
            p_start: p,
            v_start: v,
            tau: tail_tau,
            ..*self
        };
        (head, tail)
    }

    /// Interior velocity zero-crossings and stationary coasts.
    pub fn extreme_points(&self) -> Vec<ExtremePoint> {
        let mut out = Vec::new();
        let a0 = self.alpha_start * self.a_max;
        let (p1, v1) = self.coast_start();
        // first parabolic phase: v crosses zero strictly inside (0, tau0)
        if a0 != 0.0 && self.v_start * v1 < 0.0 {
            let t = -self.v_start / a0;
            if t > 0.0 && t < self.tau[0] {
                let (p, _, _) = self.eval(t);
                out.push(ExtremePoint {
                    t,
                    position: p,
                    kind: ExtremumKind::FirstPhase,
                });
            }
        }
        if v1 == 0.0 && self.tau[1] > 0.0 {
            out.push(ExtremePoint {
                t: self.tau[0],
                position: p1,
                kind: ExtremumKind::StationaryCoast,
            });
        }
        let a2 = self.alpha_end * self.a_max;
        let (p2, v2) = self.coast_end();
        let v_end = v2 + a2 * self.tau[2];
        if a2 != 0.0 && v2 * v_end < 0.0 {
            let t_local = -v2 / a2;
            if t_local > 0.0 && t_local < self.tau[2] {
                let t = self.tau[0] + self.tau[1] + t_local;
                let p = p2 + v2 * t_local + 0.5 * a2 * t_local * t_local;
                out.push(ExtremePoint {
                    t,
                    position: p,
                    kind: ExtremumKind::ThirdPhase,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    FirstPhase,
    StationaryCoast,
    ThirdPhase,
}

#[derive(Debug, Clone, Copy)]
pub struct ExtremePoint {
    /// Time relative to the primitive start.
    pub t: f64,
    pub position: f64,
    pub kind: ExtremumKind,
}

/// Two-dimensional primitive: one 1D profile per axis with (nearly) equal
/// total times.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Primitive2D {
    pub x: Primitive1D,
    pub y: Primitive1D,
}

impl Primitive2D {
    pub fn axis(&self, axis: Axis) -> &Primitive1D {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
        }
    }

    /// Shared duration; the per-axis totals agree to optimization tolerance.
    pub fn duration(&self) -> f64 {
        self.x.total_time().max(self.y.total_time())
    }

    pub fn eval(&self, t: f64) -> (Vec2, Vec2, Vec2) {
        let (px, vx, ax) = self.x.eval(t);
        let (py, vy, ay) = self.y.eval(t);
        (Vec2::new(px, py), Vec2::new(vx, vy), Vec2::new(ax, ay))
    }

    pub fn start(&self) -> (Vec2, Vec2) {
        (
            Vec2::new(self.x.p_start, self.y.p_start),
            Vec2::new(self.x.v_start, self.y.v_start),
        )
    }
}

/// Exact end position and velocity of a 2D primitive.
pub fn integrate_primitive(prim: &Primitive2D) -> (Vec2, Vec2) {
    let (px, vx) = prim.x.end_state();
    let (py, vy) = prim.y.end_state();
    (Vec2::new(px, py), Vec2::new(vx, vy))
}

/// Piecewise-analytic trajectory: a sequence of 2D primitives with absolute
/// start times. Position and velocity are continuous across pieces and the
/// terminal velocity is zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pieces: Vec<TrajectoryPiece>,
    t_move: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryPiece {
    pub t_start: f64,
    pub primitive: Primitive2D,
}

#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub t: f64,
    pub p: Vec2,
    pub v: Vec2,
    pub a: Vec2,
}

impl Trajectory {
    pub fn from_primitives(primitives: Vec<Primitive2D>) -> Trajectory {
        assert!(!primitives.is_empty(), "trajectory needs at least one piece");
        let mut pieces = Vec::with_capacity(primitives.len());
        let mut t = 0.0;
        for primitive in primitives {
            let d = primitive.duration();
            pieces.push(TrajectoryPiece {
                t_start: t,
                primitive,
            });
            t += d;
        }
        Trajectory { pieces, t_move: t }
    }

    /// Zero-length trajectory holding position `p`.
    pub fn stationary(p: Vec2, a_max: f64) -> Trajectory {
        Trajectory::from_primitives(vec![Primitive2D {
            x: Primitive1D::rest(p.x, a_max),
            y: Primitive1D::rest(p.y, a_max),
        }])
    }

    pub fn t_move(&self) -> f64 {
        self.t_move
    }

    pub fn pieces(&self) -> &[TrajectoryPiece] {
        &self.pieces
    }

    pub fn eval(&self, t: f64) -> (Vec2, Vec2, Vec2) {
        let t = t.clamp(0.0, self.t_move);
        let idx = match self
            .pieces
            .binary_search_by(|piece| piece.t_start.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let piece = &self.pieces[idx];
        piece.primitive.eval(t - piece.t_start)
    }

    /// Uniform samples at `rate_hz`, always including `t_move` as the final
    /// sample.
    pub fn sample(&self, rate_hz: f64) -> Vec<Sample> {
        assert!(rate_hz > 0.0);
        let count = (self.t_move * rate_hz).floor() as usize;
        let mut samples = Vec::with_capacity(count + 2);
        for k in 0..=count {
            let t = k as f64 / rate_hz;
            let (p, v, a) = self.eval(t);
            samples.push(Sample { t, p, v, a });
        }
        if self.t_move - count as f64 / rate_hz > 1e-12 {
            let (p, v, a) = self.eval(self.t_move);
            samples.push(Sample {
                t: self.t_move,
                p,
                v,
                a,
            });
        }
        samples
    }

    /// Absolute times of all interior extrema and stationary coasts, plus
    /// piece boundaries. These are the critical points for exact corridor
    /// membership checks of piecewise-parabolic motion.
    pub fn critical_times(&self) -> Vec<f64> {
        let mut times = Vec::new();
        for piece in &self.pieces {
            times.push(piece.t_start);
            for axis in [Axis::X, Axis::Y] {
                for ep in piece.primitive.axis(axis).extreme_points() {
                    times.push(piece.t_start + ep.t);
                }
            }
        }
        times.push(self.t_move);
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times
    }
}

/// Time-optimal 1D point-to-point profile from `(p0, v0)` to `(pf, 0)`
/// under `|v| <= v_max`, `|a| <= a_max`.
///
/// Tries the `(s, coast, -s)` family with `s = sign(pf - p0)` first and
/// falls back to the reversed family for the overshoot/reversal cases.
pub fn min_time_1d(p0: f64, pf: f64, v0: f64, v_max: f64, a_max: f64) -> Primitive1D {
    debug_assert!(v0.abs() <= v_max + 1e-12);
    debug_assert!(v_max > 0.0 && a_max > 0.0);
    let d = pf - p0;
    if d == 0.0 && v0 == 0.0 {
        return Primitive1D {
            alpha_start: 1.0,
            alpha_end: -1.0,
            p_start: p0,
            v_start: v0,
            tau: [0.0; 3],
            a_max,
        };
    }
    let s_primary = if d != 0.0 {
        d.signum()
    } else {
        -v0.signum()
    };
    let family = |s: f64| -> Option<[f64; 3]> {
        let vc_sq = s * a_max * d + 0.5 * v0 * v0;
        if vc_sq < 0.0 {
            return None;
        }
        let vc_mag = vc_sq.sqrt();
        if vc_mag <= v_max {
            // triangular profile, no coast
            let vc = s * vc_mag;
            let tau0 = s * (vc - v0) / a_max;
            let tau2 = s * vc / a_max;
            if tau0 >= -1e-12 && tau2 >= -1e-12 {
                return Some([tau0.max(0.0), 0.0, tau2.max(0.0)]);
            }
            None
        } else {
            // cruise at the velocity limit
            let vc = s * v_max;
            let tau0 = s * (vc - v0) / a_max;
            let tau2 = v_max / a_max;
            let d_accel = (v_max * v_max - v0 * v0) / (2.0 * a_max);
            let d_brake = v_max * v_max / (2.0 * a_max);
            let tau1 = (s * d - d_accel - d_brake) / v_max;
            if tau0 >= -1e-12 && tau1 >= -1e-12 {
                return Some([tau0.max(0.0), tau1.max(0.0), tau2.max(0.0)]);
            }
            None
        }
    };
    let (s, tau) = match family(s_primary) {
        Some(tau) => (s_primary, tau),
        None => (
            -s_primary,
            family(-s_primary).expect("one bang-coast-bang family is always feasible"),
        ),
    };
    Primitive1D {
        alpha_start: s,
        alpha_end: -s,
        p_start: p0,
        v_start: v0,
        tau,
        a_max,
    }
}

/// Decoupled 2D time-optimal plan ignoring obstacles: per-axis minimum-time
/// profiles, the faster axis padded with a zero-acceleration hold so both
/// axes finish at `max(Tx*, Ty*)`.
pub fn analytic_plan_2d(scenario: &Scenario) -> Trajectory {
    let v = &scenario.vehicle;
    let px = min_time_1d(scenario.p0.x, scenario.pn.x, scenario.v0.x, v.v_max, v.a_max);
    let py = min_time_1d(scenario.p0.y, scenario.pn.y, scenario.v0.y, v.v_max, v.a_max);
    let (tx, ty) = (px.total_time(), py.total_time());
    let t_total = tx.max(ty);
    if t_total == 0.0 {
        return Trajectory::stationary(scenario.p0, v.a_max);
    }
    if tx == ty {
        return Trajectory::from_primitives(vec![Primitive2D { x: px, y: py }]);
    }
    // split the slower axis at the faster axis's completion and pad the
    // faster axis with a rest coast
    let (fast, slow, t_fast, x_is_fast) = if tx < ty {
        (px, py, tx, true)
    } else {
        (py, px, ty, false)
    };
    let (slow_head, slow_tail) = slow.split_at(t_fast);
    let (p_fast_end, _) = fast.end_state();
    let pad = Primitive1D {
        alpha_start: 1.0,
        alpha_end: -1.0,
        p_start: p_fast_end,
        v_start: 0.0,
        tau: [0.0, t_total - t_fast, 0.0],
        a_max: v.a_max,
    };
    let pieces = if x_is_fast {
        vec![
            Primitive2D { x: fast, y: slow_head },
            Primitive2D { x: pad, y: slow_tail },
        ]
    } else {
        vec![
            Primitive2D { x: slow_head, y: fast },
            Primitive2D { x: slow_tail, y: pad },
        ]
    };
    Trajectory::from_primitives(pieces)
}

/// CSV export at a uniform rate: `t,px,py,vx,vy,ax,ay` with a header row.
pub fn trajectory_csv(traj: &Trajectory, rate_hz: f64) -> String {
    let mut out = String::from("t,px,py,vx,vy,ax,ay\n");
    for s in traj.sample(rate_hz) {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.t, s.p.x, s.p.y, s.v.x, s.v.y, s.a.x, s.a.y
        ));
    }
    out
}
