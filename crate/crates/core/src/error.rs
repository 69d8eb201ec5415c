use thiserror::Error;

/// Failures while building, reading or validating a triangulation.
#[derive(Debug, Error)]
pub enum MeshError {
    #[error("degenerate rectangle: ({x0}, {y0}) to ({x1}, {y1})")]
    DegenerateRectangle { x0: f64, y0: f64, x1: f64, y1: f64 },
    #[error("invalid mesh parameters: {0}")]
    InvalidParameters(String),
    #[error("mesh parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("non-conforming mesh: {0}")]
    NonConforming(String),
    #[error("zero-area cell {0}")]
    ZeroArea(usize),
    #[error("vertex index {index} out of range in cell {cell}")]
    VertexOutOfRange { cell: usize, index: usize },
    #[error("vertex {0} is not referenced by any cell")]
    OrphanVertex(usize),
    #[error("point ({0}, {1}) lies outside the mesh")]
    PointOutside(f64, f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Failures of the linear and nonlinear solvers.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("linear solve failed: {reason} (last residual {residual:e})")]
    LinearSolveFailed { reason: String, residual: f64 },
    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("Picard iteration did not converge in {iterations} iterations (increment {increment:e})")]
    PicardDiverged { iterations: usize, increment: f64 },
    #[error("discrete solution left [{lower}, {upper}]: min {min:e}, max {max:e}")]
    BoundViolation {
        lower: f64,
        upper: f64,
        min: f64,
        max: f64,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
