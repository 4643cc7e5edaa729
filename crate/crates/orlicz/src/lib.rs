//! Scenario runner on top of `orlicz-core`: configuration files, the
//! built-in presets, and the `check`, `solve`, `verify` and `sweep` runs with
//! their output files.
//!
//! Every run returns an [`Outcome`] whose [`Status`] maps to the process exit
//! code; errors map to exit code 2.

use std::path::{Path, PathBuf};

pub mod check;
pub mod config;
pub mod io;
pub mod presets;
pub mod solve;
pub mod sweep;
pub mod verify;

pub use check::{check, run_check, CheckReport};
pub use config::{load_scenario, load_sweep, Overrides, ScenarioConfig, SweepConfig};
pub use solve::{run_solve, solve_scenario, Solved};
pub use sweep::run_sweep;
pub use verify::{run_verify, verify_field, VerifyOutput};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] orlicz_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl RunError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    NonConvergence,
    VerificationFailure,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::NonConvergence => 3,
            Status::VerificationFailure => 4,
        }
    }
}

/// Exit code for a run that could not be carried out.
pub const CONFIG_ERROR: i32 = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub status: Status,
    pub files: Vec<PathBuf>,
    /// What failed, for statuses other than success.
    pub messages: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }
}

pub(crate) fn output_path(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{name}.{suffix}"))
}
