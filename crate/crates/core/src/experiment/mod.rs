//! Batch experiments: config files, the built-in scenario catalogue, the
//! runner that writes result files, and verification of those files.

pub mod catalogue;
pub mod config;
pub mod runner;
pub mod verify;

use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

pub use catalogue::{catalogue, find_scenario, CatalogueEntry, Criterion};
pub use config::{Experiment, ExperimentConfig, FlowExperiment, LemmaExperiment};
pub use runner::{load_config, run_experiment, MeasureStats, RunManifest, RunReport};
pub use verify::{verify, CriterionResult, VerifyReport};

/// Failures of the experiment layer, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error at line {line}, key `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("invalid scenario: {0}")]
    Validation(crate::Error),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown scenario `{0}` (see `swf list`)")]
    ScenarioNotFound(String),

    #[error("numerical failure: {0}")]
    Numerical(crate::Error),

    #[error("malformed output: {0}")]
    Output(String),
}

impl ExperimentError {
    pub(crate) fn config(line: usize, key: &str, message: &str) -> Self {
        ExperimentError::Config {
            line,
            key: key.to_string(),
            message: message.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ExperimentError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 3 config, 4 validation, 5 io, 6 unknown scenario,
    /// 7 numerical. (0 is success, 1 a failed verification, 2 bad usage.)
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config { .. } => 3,
            ExperimentError::Validation(_) => 4,
            ExperimentError::Io { .. } | ExperimentError::Output(_) => 5,
            ExperimentError::ScenarioNotFound(_) => 6,
            ExperimentError::Numerical(_) => 7,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentError::Config { .. } => "config",
            ExperimentError::Validation(_) => "validation",
            ExperimentError::Io { .. } => "io",
            ExperimentError::Output(_) => "io",
            ExperimentError::ScenarioNotFound(_) => "scenario-not-found",
            ExperimentError::Numerical(_) => "numerical",
        }
    }

    /// One-line JSON description for machine consumption.
    pub fn to_json(&self) -> String {
        let mut v = json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        match self {
            ExperimentError::Config { line, key, .. } => {
                v["line"] = json!(line);
                v["key"] = json!(key);
            }
            ExperimentError::Io { path, .. } => v["path"] = json!(path.display().to_string()),
            ExperimentError::ScenarioNotFound(name) => v["scenario"] = json!(name),
            _ => {}
        }
        v.to_string()
    }
}

impl From<crate::Error> for ExperimentError {
    fn from(e: crate::Error) -> Self {
        use crate::Error as E;
        match e {
            E::Numerical(_) | E::Integration { .. } => ExperimentError::Numerical(e),
            _ => ExperimentError::Validation(e),
        }
    }
}
