//! Experiment plumbing: presets, diagnostics, file output and studies.

pub mod config;
pub mod convergence;
pub mod diagnostics;
pub mod presets;
pub mod run;
pub mod vtk;

use thiserror::Error;

use crate::error::{MeshError, SolverError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("mesh error: {0}")]
    Mesh(#[from] MeshError),
    #[error("solver failed{}: {source}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    Solver {
        step: Option<usize>,
        #[source]
        source: SolverError,
    },
    #[error("resolution {level} ({cells} cells): {source}")]
    Level {
        level: usize,
        cells: usize,
        source: Box<HarnessError>,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl From<SolverError> for HarnessError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::InvalidConfig(msg) => Self::Config(msg),
            source => Self::Solver { step: None, source },
        }
    }
}

impl HarnessError {
    /// Process exit code: 2 for bad input, 3 for solver failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Mesh(_) => 2,
            Self::Solver { .. } => 3,
            Self::Level { source, .. } => source.exit_code(),
            Self::Io(_) | Self::Csv(_) => 1,
        }
    }
}
