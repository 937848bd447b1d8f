//! Benchmark suite: seeded random/structured instance generation, the
//! PMP-vs-baseline comparison runner, and trajectory validation used by
//! the `validate` subcommand.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::baseline::{intersample_violation_count, solve_baseline};
use crate::corridors::{shortest_cell_path, CorridorSequence};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::kinematics::{Sample, Trajectory};
use crate::planner::{plan, PlanStatus};
use crate::world::{load_map, occupied_cells, OccupancyGrid, Scenario, Vehicle};

/// Fixed structured environment (walls of block obstacles).
pub const STRUCTURED_MAP: &str = include_str!("../fixtures/structured.map");

/// Rejection budget per generated instance.
const MAX_REJECTIONS: usize = 10_000;
/// Endpoint attempts before the obstacle layout is resampled.
const TRIES_PER_MAP: usize = 200;
/// Benchmark vehicle footprint (meters).
const BENCH_FOOTPRINT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchKind {
    Random,
    Structured,
}

impl FromStr for BenchKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<BenchKind> {
        match s {
            "random" => Ok(BenchKind::Random),
            "structured" => Ok(BenchKind::Structured),
            other => Err(Error::Validation(format!(
                "unknown benchmark kind {other:?} (expected random|structured)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub kind: BenchKind,
    pub n: usize,
    /// Per-cell obstacle probability for random maps.
    pub density: f64,
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub cell_size: f64,
    /// Grid points per corridor stage for the baseline.
    pub baseline_grid: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> BenchmarkConfig {
        BenchmarkConfig {
            kind: BenchKind::Random,
            n: 100,
            density: 0.1,
            seed: 0,
            rows: 8,
            cols: 10,
            cell_size: 0.5,
            baseline_grid: 30,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.density) {
            return Err(Error::Validation("density must be in [0, 1)".into()));
        }
        if self.n == 0 || self.rows == 0 || self.cols == 0 {
            return Err(Error::Validation("n, rows, cols must be positive".into()));
        }
        if self.cell_size <= 0.0 {
            return Err(Error::Validation("cell size must be positive".into()));
        }
        if self.baseline_grid < 2 {
            return Err(Error::Validation("baseline grid needs >= 2 points".into()));
        }
        Ok(())
    }
}

fn sample_map(cfg: &BenchmarkConfig, rng: &mut ChaCha8Rng) -> Result<OccupancyGrid> {
    match cfg.kind {
        BenchKind::Structured => load_map(STRUCTURED_MAP),
        BenchKind::Random => {
            let occupied = (0..cfg.rows * cfg.cols)
                .map(|_| rng.gen_bool(cfg.density))
                .collect();
            OccupancyGrid::new(cfg.rows, cfg.cols, cfg.cell_size, occupied)
        }
    }
}

fn footprint_free(p: Vec2, vehicle: &Vehicle, grid: &OccupancyGrid) -> bool {
    match occupied_cells(p, vehicle, grid) {
        Ok(cells) => cells.iter().all(|&c| grid.is_free(c)),
        Err(_) => false,
    }
}

/// Draw one instance: obstacle layout, vehicle limits sampled from
/// [0.5, 2.0] m/s and [2.0, 6.0] m/s^2, and endpoints at rest separated
/// by more than five vehicle widths with a connecting cell path.
pub fn generate_scenario(cfg: &BenchmarkConfig, rng: &mut ChaCha8Rng) -> Result<Scenario> {
    let mut rejections = 0;
    loop {
        let grid = sample_map(cfg, rng)?;
        let extent = grid.extent();
        for _ in 0..TRIES_PER_MAP {
            let vehicle = Vehicle::new(
                BENCH_FOOTPRINT,
                BENCH_FOOTPRINT,
                rng.gen_range(0.5..=2.0),
                rng.gen_range(2.0..=6.0),
            )?;
            let half = vehicle.half_extents();
            let mut draw = |lo: f64, hi: f64| rng.gen_range(lo..=hi);
            let p0 = Vec2::new(
                draw(extent.min.x + half.x, extent.max.x - half.x),
                draw(extent.min.y + half.y, extent.max.y - half.y),
            );
            let pn = Vec2::new(
                draw(extent.min.x + half.x, extent.max.x - half.x),
                draw(extent.min.y + half.y, extent.max.y - half.y),
            );
            let ok = (pn - p0).norm() > 5.0 * vehicle.width
                && footprint_free(p0, &vehicle, &grid)
                && footprint_free(pn, &vehicle, &grid)
                && matches!((grid.cell_of(p0), grid.cell_of(pn)), (Some(a), Some(b))
                    if shortest_cell_path(&grid, a, b).is_ok());
            if ok {
                let scenario = Scenario {
                    grid,
                    vehicle,
                    p0,
                    pn,
                    v0: Vec2::new(0.0, 0.0),
                };
                scenario.validate()?;
                return Ok(scenario);
            }
            rejections += 1;
            if rejections >= MAX_REJECTIONS {
                return Err(Error::GenerationStuck(rejections));
            }
        }
    }
}

/// The full seeded suite.
pub fn generate_scenarios(cfg: &BenchmarkConfig) -> Result<Vec<Scenario>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.n).map(|_| generate_scenario(cfg, &mut rng)).collect()
}

/// Per-instance benchmark outcome. Wall-clock fields are excluded from
/// the results CSV so it stays byte-identical across runs.
#[derive(Debug, Clone)]
pub struct InstanceRecord {
    pub index: usize,
    pub status: PlanStatus,
    pub n_corridors: usize,
    pub t_move_pmp: Option<f64>,
    pub t_move_ocp: Option<f64>,
    /// (t_move_pmp - t_move_ocp) / t_move_ocp
    pub eps_move: Option<f64>,
    /// Feasibility violations of the PMP trajectory at 100 Hz plus
    /// extremum times (collision, corridor, velocity, acceleration).
    pub pmp_violations: Option<usize>,
    /// Baseline inter-sample corridor violations at the configured grid.
    pub ocp_violations: Option<usize>,
    /// Same at twice the grid resolution.
    pub ocp_violations_fine: Option<usize>,
    pub t_solver_pmp: Option<f64>,
    pub t_total_pmp: Option<f64>,
    pub t_solver_ocp: Option<f64>,
}

pub struct BenchResults {
    pub records: Vec<InstanceRecord>,
}

/// Count sampled states (100 Hz plus extremum/switch times) violating
/// obstacle-freeness, corridor membership, or the velocity/acceleration
/// bounds.
pub fn feasibility_violations(
    trajectory: &Trajectory,
    sequence: &CorridorSequence,
    scenario: &Scenario,
    rate_hz: f64,
) -> usize {
    let half = scenario.vehicle.half_extents();
    let v = &scenario.vehicle;
    // active corridor constraints hold only to the solver's (acceptable)
    // tolerance, so admit membership with matching slop
    let eps = 1e-5;
    let mut collision_vehicle = scenario.vehicle;
    collision_vehicle.width -= 2.0 * eps;
    collision_vehicle.length -= 2.0 * eps;
    let mut states: Vec<Sample> = trajectory.sample(rate_hz);
    for t in trajectory.critical_times() {
        let (p, vel, a) = trajectory.eval(t);
        states.push(Sample { t, p, v: vel, a });
    }
    states
        .iter()
        .filter(|s| {
            !footprint_free(s.p, &collision_vehicle, &scenario.grid)
                || !sequence.admits(s.p, half, eps)
                || s.v.norm_inf() > v.v_max + 1e-6
                || s.a.norm_inf() > v.a_max + 1e-6
        })
        .count()
}

/// Run PMP and the baseline on every instance of the seeded suite.
/// Per-instance failures are recorded in the row, never propagated.
pub fn run_bench(cfg: &BenchmarkConfig) -> Result<BenchResults> {
    let scenarios = generate_scenarios(cfg)?;
    let records = scenarios
        .iter()
        .enumerate()
        .map(|(index, sc)| run_instance(index, sc, cfg))
        .collect();
    Ok(BenchResults { records })
}

fn run_instance(index: usize, scenario: &Scenario, cfg: &BenchmarkConfig) -> InstanceRecord {
    let outcome = plan(scenario);
    let mut rec = InstanceRecord {
        index,
        status: outcome.report.status,
        n_corridors: outcome.report.n_corridors,
        t_move_pmp: None,
        t_move_ocp: None,
        eps_move: None,
        pmp_violations: None,
        ocp_violations: None,
        ocp_violations_fine: None,
        t_solver_pmp: Some(outcome.report.t_solver),
        t_total_pmp: Some(outcome.report.t_total),
        t_solver_ocp: None,
    };
    if let (Some(traj), Some(seq)) = (&outcome.trajectory, &outcome.corridors) {
        rec.t_move_pmp = Some(outcome.report.t_move);
        rec.pmp_violations = Some(feasibility_violations(traj, seq, scenario, 100.0));
    }
    if let Some(seq) = &outcome.corridors {
        if let Ok((traj, report)) = solve_baseline(seq, scenario, cfg.baseline_grid) {
            rec.t_move_ocp = Some(report.t_move);
            rec.t_solver_ocp = Some(report.t_solver);
            rec.ocp_violations =
                Some(intersample_violation_count(&traj, seq, scenario, 100.0));
        }
        if let Ok((traj, _)) = solve_baseline(seq, scenario, 2 * cfg.baseline_grid) {
            rec.ocp_violations_fine =
                Some(intersample_violation_count(&traj, seq, scenario, 100.0));
        }
    }
    if let (Some(pmp), Some(ocp)) = (rec.t_move_pmp, rec.t_move_ocp) {
        if ocp > 0.0 {
            rec.eps_move = Some((pmp - ocp) / ocp);
        }
    }
    rec
}

fn opt_num<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

/// Deterministic per-instance CSV (no wall-clock columns).
pub fn results_csv(results: &BenchResults) -> String {
    let mut out = String::from(
        "index,status,n_corridors,t_move_pmp,t_move_ocp,eps_move,\
         pmp_violations,ocp_violations,ocp_violations_fine\n",
    );
    for r in &results.records {
        out.push_str(&format!(
            "{},{:?},{},{},{},{},{},{},{}\n",
            r.index,
            r.status,
            r.n_corridors,
            opt_num(&r.t_move_pmp),
            opt_num(&r.t_move_ocp),
            opt_num(&r.eps_move),
            opt_num(&r.pmp_violations),
            opt_num(&r.ocp_violations),
            opt_num(&r.ocp_violations_fine),
        ));
    }
    out
}

/// mean/max/median/stddev (population) of a sample.
pub fn stats(values: &[f64]) -> serde_json::Value {
    if values.is_empty() {
        return serde_json::Value::Null;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    json!({ "mean": mean, "max": max, "median": median, "stddev": var.sqrt() })
}

fn ms(seconds: f64) -> f64 {
    (seconds * 1e6).round() / 1e3
}

/// Suite summary. The `deterministic` block is recomputable from the
/// results CSV exactly; the `timing_ms` block holds wall-clock stats.
pub fn summary(results: &BenchResults) -> serde_json::Value {
    let rs = &results.records;
    let count = |s: PlanStatus| rs.iter().filter(|r| r.status == s).count();
    let collect = |f: &dyn Fn(&InstanceRecord) -> Option<f64>| -> Vec<f64> {
        rs.iter().filter_map(f).collect()
    };
    let timing = |f: &dyn Fn(&InstanceRecord) -> Option<f64>| -> serde_json::Value {
        stats(&collect(f).iter().map(|&s| ms(s)).collect::<Vec<_>>())
    };
    json!({
        "instances": rs.len(),
        "deterministic": {
            "solved": count(PlanStatus::Solved),
            "solved_analytic": count(PlanStatus::SolvedAnalytic),
            "solver_failures": count(PlanStatus::SolverFailure),
            "no_path": count(PlanStatus::NoPath),
            "degenerate_input": count(PlanStatus::DegenerateInput),
            "t_move_pmp": stats(&collect(&|r| r.t_move_pmp)),
            "t_move_ocp": stats(&collect(&|r| r.t_move_ocp)),
            "eps_move": stats(&collect(&|r| r.eps_move)),
            "pmp_violations_total":
                rs.iter().filter_map(|r| r.pmp_violations).sum::<usize>(),
            "ocp_instances_with_violations":
                rs.iter().filter(|r| r.ocp_violations.unwrap_or(0) > 0).count(),
            "ocp_instances_with_violations_fine":
                rs.iter().filter(|r| r.ocp_violations_fine.unwrap_or(0) > 0).count(),
        },
        "timing_ms": {
            "t_solver_pmp": timing(&|r| r.t_solver_pmp),
            "t_total_pmp": timing(&|r| r.t_total_pmp),
            "t_solver_ocp": timing(&|r| r.t_solver_ocp),
        },
    })
}

/// Validation verdict for an externally supplied trajectory.
#[derive(Debug)]
pub struct Verdict {
    pub collision_ok: bool,
    pub bounds_ok: bool,
    pub continuity_ok: bool,
    /// Human-readable description of the first failed check.
    pub first_violation: Option<String>,
}

impl Verdict {
    pub fn all_ok(&self) -> bool {
        self.collision_ok && self.bounds_ok && self.continuity_ok
    }
}

/// Parse the `t,px,py,vx,vy,ax,ay` CSV written by the planner.
pub fn parse_trajectory_csv(text: &str) -> Result<Vec<Sample>> {
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue; // header
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: i + 1,
                reason: format!("bad number: {e}"),
            })?;
        if fields.len() != 7 {
            return Err(Error::Parse {
                line: i + 1,
                reason: format!("expected 7 columns, got {}", fields.len()),
            });
        }
        samples.push(Sample {
            t: fields[0],
            p: Vec2::new(fields[1], fields[2]),
            v: Vec2::new(fields[3], fields[4]),
            a: Vec2::new(fields[5], fields[6]),
        });
    }
    Ok(samples)
}

/// Check sampled states for footprint collisions, velocity/acceleration
/// bound violations, and kinematic consistency between rows.
pub fn validate_samples(samples: &[Sample], grid: &OccupancyGrid, vehicle: &Vehicle) -> Verdict {
    // corridor constraints hold only to solver tolerance; don't flag a
    // sub-micrometer overhang as a collision
    let mut collision_vehicle = *vehicle;
    collision_vehicle.width -= 2e-6;
    collision_vehicle.length -= 2e-6;
    let mut verdict = Verdict {
        collision_ok: true,
        bounds_ok: true,
        continuity_ok: true,
        first_violation: None,
    };
    let record = |ok: &mut bool, first: &mut Option<String>, msg: String| {
        *ok = false;
        if first.is_none() {
            *first = Some(msg);
        }
    };
    for (i, s) in samples.iter().enumerate() {
        if !footprint_free(s.p, &collision_vehicle, grid) {
            record(
                &mut verdict.collision_ok,
                &mut verdict.first_violation,
                format!("row {}: footprint at ({}, {}) collides or leaves the map", i, s.p.x, s.p.y),
            );
        }
        if s.v.norm_inf() > vehicle.v_max + 1e-6 || s.a.norm_inf() > vehicle.a_max + 1e-6 {
            record(
                &mut verdict.bounds_ok,
                &mut verdict.first_violation,
                format!("row {}: |v|={} |a|={} exceed limits", i, s.v.norm_inf(), s.a.norm_inf()),
            );
        }
        if i > 0 {
            let prev = &samples[i - 1];
            let dt = s.t - prev.t;
            let slack = 1e-6;
            let p_pred = prev.p + prev.v.scale(dt) + prev.a.scale(0.5 * dt * dt);
            let consistent = dt > 0.0
                && (s.p - p_pred).norm_inf() <= vehicle.a_max * dt * dt + slack
                && (s.v - prev.v).norm_inf() <= vehicle.a_max * dt + slack;
            if !consistent {
                record(
                    &mut verdict.continuity_ok,
                    &mut verdict.first_violation,
                    format!("row {}: state jump inconsistent with the bounds over dt={dt}", i),
                );
            }
        }
    }
    verdict
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corridors::corridors_for;
    use crate::world::serialize_scenario;

    fn small_cfg(n: usize, seed: u64) -> BenchmarkConfig {
        BenchmarkConfig {
            n,
            seed,
            ..BenchmarkConfig::default()
        }
    }

    #[test]
    fn generation_is_deterministic_and_valid() {
        let cfg = small_cfg(5, 7);
        let a = generate_scenarios(&cfg).unwrap();
        let b = generate_scenarios(&cfg).unwrap();
        for (sa, sb) in a.iter().zip(&b) {
            assert_eq!(serialize_scenario(sa), serialize_scenario(sb));
            sa.validate().unwrap();
            assert!((sa.pn - sa.p0).norm() > 5.0 * sa.vehicle.width);
            assert!((0.5..=2.0).contains(&sa.vehicle.v_max));
            assert!((2.0..=6.0).contains(&sa.vehicle.a_max));
        }
    }

    #[test]
    fn near_full_density_gets_stuck() {
        let cfg = BenchmarkConfig {
            n: 1,
            density: 0.999,
            rows: 3,
            cols: 3,
            seed: 1,
            ..BenchmarkConfig::default()
        };
        match generate_scenarios(&cfg) {
            Err(Error::GenerationStuck(n)) => assert_eq!(n, MAX_REJECTIONS),
            other => panic!("expected GenerationStuck, got {other:?}"),
        }
    }

    #[test]
    fn structured_kind_uses_the_fixture_map() {
        let cfg = BenchmarkConfig {
            kind: BenchKind::Structured,
            n: 2,
            seed: 3,
            ..BenchmarkConfig::default()
        };
        for sc in generate_scenarios(&cfg).unwrap() {
            assert_eq!(sc.grid.rows(), 10);
            assert_eq!(sc.grid.cols(), 16);
            assert!(sc.grid.num_occupied() > 0);
        }
    }

    #[test]
    fn bench_rows_are_deterministic() {
        let cfg = small_cfg(2, 11);
        let a = results_csv(&run_bench(&cfg).unwrap());
        let b = results_csv(&run_bench(&cfg).unwrap());
        assert_eq!(a, b);
        assert!(a.lines().count() == 3);
    }

    #[test]
    fn summary_matches_hand_stats() {
        let s = stats(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s["mean"], 2.5);
        assert_eq!(s["median"], 2.5);
        assert_eq!(s["max"], 4.0);
        assert!((s["stddev"].as_f64().unwrap() - 1.118033988749895).abs() < 1e-12);
    }

    #[test]
    fn planner_output_validates_cleanly() {
        let cfg = small_cfg(3, 5);
        let scenarios = generate_scenarios(&cfg).unwrap();
        let mut checked = 0;
        for sc in &scenarios {
            let outcome = plan(sc);
            let Some(traj) = &outcome.trajectory else { continue };
            let csv = crate::kinematics::trajectory_csv(traj, 100.0);
            let samples = parse_trajectory_csv(&csv).unwrap();
            let verdict = validate_samples(&samples, &sc.grid, &sc.vehicle);
            assert!(verdict.all_ok(), "{:?}", verdict.first_violation);
            let seq = outcome.corridors.as_ref().unwrap();
            assert_eq!(feasibility_violations(traj, seq, sc, 100.0), 0);
            checked += 1;
        }
        assert!(checked > 0);
    }

    #[test]
    fn corrupted_sample_fails_the_right_check() {
        let cfg = small_cfg(5, 5);
        let scenarios = generate_scenarios(&cfg).unwrap();
        let (sc, outcome) = scenarios
            .iter()
            .map(|sc| (sc, plan(sc)))
            .find(|(_, o)| o.trajectory.is_some())
            .unwrap();
        let traj = outcome.trajectory.as_ref().unwrap();
        let mut samples =
            parse_trajectory_csv(&crate::kinematics::trajectory_csv(traj, 100.0)).unwrap();
        let mid = samples.len() / 2;
        samples[mid].v.x = sc.vehicle.v_max + 1.0;
        let verdict = validate_samples(&samples, &sc.grid, &sc.vehicle);
        assert!(!verdict.bounds_ok);
        assert!(verdict.first_violation.unwrap().contains(&format!("row {mid}")));
    }

    #[test]
    fn baseline_violation_fields_populated_on_l_turn() {
        let sc = Scenario {
            grid: load_map("cells 6 6 0.5\n####..\n####..\n####..\n####..\n......\n......\n")
                .unwrap(),
            vehicle: Vehicle::new(0.5, 0.5, 1.0, 2.0).unwrap(),
            p0: Vec2::new(0.5, 0.5),
            pn: Vec2::new(2.5, 2.75),
            v0: Vec2::new(0.0, 0.0),
        };
        let seq = corridors_for(&sc).unwrap();
        assert_eq!(seq.len(), 2);
        let rec = run_instance(0, &sc, &BenchmarkConfig::default());
        assert_eq!(rec.status, PlanStatus::Solved);
        assert!(rec.eps_move.is_some());
        assert!(rec.ocp_violations.is_some());
        assert!(rec.ocp_violations_fine.is_some());
        assert_eq!(rec.pmp_violations, Some(0));
    }
}
