use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("footprint leaves the grid extent")]
    OutOfBounds,

    #[error("no cell path from start to goal")]
    NoPath,

    #[error("corridor pruning emptied the sequence")]
    DegenerateSequence,

    #[error("waypoint candidate set is empty")]
    EmptyCandidates,

    #[error("selected waypoint {index} violates its corridor bounds")]
    SelectionMismatch { index: usize },

    #[error("solver hit the iteration limit ({0} iterations)")]
    MaxIterations(usize),

    #[error("solver diverged (non-finite iterate)")]
    SolverDiverged,

    #[error("endpoint generation stuck after {0} rejections")]
    GenerationStuck(usize),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
