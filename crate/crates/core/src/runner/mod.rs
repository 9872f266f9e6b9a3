//! Experiment orchestration: config, pipeline execution and grids.

mod config;
mod grid;
mod pipeline;

use std::fmt;

pub use config::{ExperimentConfig, ModelKind, Threshold};
pub use grid::{load_grid_configs, run_grid, GridEntry, GridFailure, GridOutcome};
pub use pipeline::{run_experiment, Classifier, ExperimentOutcome, FittedPipeline};

use crate::error::Error;

/// Overrides the parent of every experiment's output directory.
pub const OUTPUT_ROOT_ENV: &str = "UQPIPE_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Rejected before any computation.
    Config,
    /// Failed while running a pipeline stage.
    Runtime,
}

#[derive(Debug)]
pub struct RunError {
    pub kind: ErrorKind,
    pub stage: &'static str,
    pub source: Error,
}

impl RunError {
    pub fn config(source: Error) -> Self {
        Self {
            kind: ErrorKind::Config,
            stage: "config",
            source,
        }
    }

    pub fn runtime(stage: &'static str, source: Error) -> Self {
        Self {
            kind: ErrorKind::Runtime,
            stage,
            source,
        }
    }

    /// Process exit code: 1 for config errors, 2 for runtime errors.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => 1,
            ErrorKind::Runtime => 2,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage, self.source)
    }
}

impl std::error::Error for RunError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, RunError>;
}

impl<T> StageExt<T> for crate::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, RunError> {
        self.map_err(|e| RunError::runtime(stage, e))
    }
}
