//! Near time-optimal motion planning for holonomic vehicles in grid
//! environments.
//!
//! The planner models the free space as a sequence of axis-aligned
//! rectangular corridors, represents motion through each corridor with a
//! bang-coast-bang primitive per axis, and optimizes the few remaining
//! parameters with a small dense constrained solver. A direct-transcription
//! multiple-shooting baseline through the same corridors serves as the
//! optimality reference.
//!
//! See the `examples/` directory for runnable entry points into each
//! capability, and the `corridor-planner` binary for the file-based CLI.

pub mod baseline;
pub mod bench;
pub mod corridors;
pub mod error;
pub mod geom;
pub mod heuristics;
pub mod kinematics;
pub mod nlp;
pub mod planner;
pub mod solver;
pub mod world;

pub use error::{Error, Result};
pub use geom::{Axis, Rect, Vec2};
pub use kinematics::{Primitive1D, Primitive2D, Trajectory};
pub use planner::{plan, PlanOutcome, PlanReport, PlanStatus};
pub use world::{OccupancyGrid, Scenario, Vehicle};
