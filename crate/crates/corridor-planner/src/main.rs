//! Thin command-line front end over the `corridor_planner` library.
//!
//! Exit codes: 0 success, 1 I/O or internal error, 2 solver failure,
//! 3 no path, 4 degenerate input, 5 parse/validation error,
//! 6 generation stuck, 7 trajectory validation failed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use corridor_planner::bench::{
    self, BenchKind, BenchmarkConfig, parse_trajectory_csv, validate_samples,
};
use corridor_planner::error::Error;
use corridor_planner::kinematics::trajectory_csv;
use corridor_planner::planner::{plan, PlanStatus};
use corridor_planner::world::{load_map, load_scenario_file, serialize_scenario, Vehicle};

#[derive(Parser)]
#[command(name = "corridor-planner", version, about = "Near time-optimal corridor planner", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one scenario and write trajectory artifacts.
    Plan {
        /// Scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Sampling rate for the trajectory CSV, Hz.
        #[arg(long, default_value_t = 100.0)]
        rate: f64,
    },
    /// Generate a seeded suite and compare against the baseline.
    Bench {
        #[arg(long, default_value = "random")]
        kind: String,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Baseline grid points per corridor.
        #[arg(long, default_value_t = 30)]
        baseline_grid: usize,
    },
    /// Check a sampled trajectory against a map and vehicle limits.
    Validate {
        /// Trajectory CSV (t,px,py,vx,vy,ax,ay).
        #[arg(long)]
        traj: PathBuf,
        /// Map text file.
        #[arg(long)]
        map: PathBuf,
        /// Vehicle as W,L,vmax,amax.
        #[arg(long)]
        vehicle: String,
    },
    /// Write a seeded suite of scenario JSON files.
    Gen {
        #[arg(long, default_value = "random")]
        kind: String,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::MaxIterations(_) | Error::SolverDiverged => 2,
        Error::NoPath => 3,
        Error::DegenerateSequence | Error::EmptyCandidates | Error::OutOfBounds => 4,
        Error::Parse { .. } | Error::Validation(_) | Error::Json(_) => 5,
        Error::GenerationStuck(_) => 6,
        _ => 1,
    }
}

fn write(path: &Path, contents: &str) -> Result<(), Error> {
    fs::write(path, contents)?;
    Ok(())
}

fn cmd_plan(scenario: &Path, out: &Path, rate: f64) -> Result<u8, Error> {
    let sc = load_scenario_file(scenario)?;
    fs::create_dir_all(out)?;
    let outcome = plan(&sc);
    write(
        &out.join("report.json"),
        &serde_json::to_string_pretty(&outcome.report)?,
    )?;
    if let Some(seq) = &outcome.corridors {
        write(
            &out.join("corridors.json"),
            &serde_json::to_string_pretty(&seq.to_json())?,
        )?;
    }
    if let Some(sel) = &outcome.selection {
        write(
            &out.join("selection.json"),
            &serde_json::to_string_pretty(&sel.to_json())?,
        )?;
    }
    if let Some(traj) = &outcome.trajectory {
        write(&out.join("trajectory.csv"), &trajectory_csv(traj, rate))?;
        write(
            &out.join("pieces.json"),
            &serde_json::to_string_pretty(traj)?,
        )?;
    }
    eprintln!(
        "{:?}: t_move {:.6} s, solver {:.3} ms, total {:.3} ms",
        outcome.report.status,
        outcome.report.t_move,
        outcome.report.t_solver * 1e3,
        outcome.report.t_total * 1e3,
    );
    Ok(match outcome.report.status {
        PlanStatus::Solved | PlanStatus::SolvedAnalytic => 0,
        PlanStatus::SolverFailure => 2,
        PlanStatus::NoPath => 3,
        PlanStatus::DegenerateInput => 4,
    })
}

fn config(kind: &str, n: usize, density: f64, seed: u64, baseline_grid: usize) -> Result<BenchmarkConfig, Error> {
    let cfg = BenchmarkConfig {
        kind: kind.parse::<BenchKind>()?,
        n,
        density,
        seed,
        baseline_grid,
        ..BenchmarkConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_bench(cfg: &BenchmarkConfig, out: &Path) -> Result<u8, Error> {
    fs::create_dir_all(out)?;
    let results = bench::run_bench(cfg)?;
    write(&out.join("results.csv"), &bench::results_csv(&results))?;
    write(
        &out.join("summary.json"),
        &serde_json::to_string_pretty(&bench::summary(&results))?,
    )?;
    eprintln!("{} instances -> {}", results.records.len(), out.display());
    Ok(0)
}

fn cmd_validate(traj: &Path, map: &Path, vehicle: &str) -> Result<u8, Error> {
    let parts: Vec<f64> = vehicle
        .split(',')
        .map(|f| f.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Error::Validation(format!("bad --vehicle: {e}")))?;
    let [w, l, v_max, a_max] = parts[..] else {
        return Err(Error::Validation("--vehicle needs W,L,vmax,amax".into()));
    };
    let vehicle = Vehicle::new(w, l, v_max, a_max)?;
    let grid = load_map(&fs::read_to_string(map)?)?;
    let samples = parse_trajectory_csv(&fs::read_to_string(traj)?)?;
    let verdict = validate_samples(&samples, &grid, &vehicle);
    println!("collision: {}", if verdict.collision_ok { "ok" } else { "FAIL" });
    println!("bounds:    {}", if verdict.bounds_ok { "ok" } else { "FAIL" });
    println!("continuity:{}", if verdict.continuity_ok { " ok" } else { " FAIL" });
    if let Some(first) = &verdict.first_violation {
        println!("first violation: {first}");
    }
    Ok(if verdict.all_ok() { 0 } else { 7 })
}

fn cmd_gen(cfg: &BenchmarkConfig, out: &Path) -> Result<u8, Error> {
    fs::create_dir_all(out)?;
    let scenarios = bench::generate_scenarios(cfg)?;
    for (i, sc) in scenarios.iter().enumerate() {
        write(&out.join(format!("scenario_{i:03}.json")), &serialize_scenario(sc))?;
    }
    eprintln!("{} scenarios -> {}", scenarios.len(), out.display());
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Plan { scenario, out, rate } => cmd_plan(&scenario, &out, rate),
        Command::Bench { kind, n, density, seed, out, baseline_grid } => {
            cmd_bench(&config(&kind, n, density, seed, baseline_grid)?, &out)
        }
        Command::Validate { traj, map, vehicle } => cmd_validate(&traj, &map, &vehicle),
        Command::Gen { kind, n, density, seed, out } => {
            cmd_gen(&config(&kind, n, density, seed, 30)?, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
