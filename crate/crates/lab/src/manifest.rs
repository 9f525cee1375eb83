use std::path::PathBuf;

use serde::{Deserialize, Serialize};

/// One named assertion evaluated by a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Versions {
    pub qpspec: String,
    pub qpspec_core: String,
}

/// Everything needed to reproduce and audit a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    /// The config document exactly as read.
    pub config: serde_json::Value,
    /// CLI overrides applied on top of the document.
    pub overrides: serde_json::Value,
    /// Every value the command consumed, defaults filled in.
    pub parameters: serde_json::Value,
    pub versions: Versions,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_s: f64,
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
    pub verify: bool,
    pub summary: serde_json::Value,
}

pub fn versions() -> Versions {
    Versions {
        qpspec: env!("CARGO_PKG_VERSION").into(),
        qpspec_core: qpspec_core::VERSION.into(),
    }
}
