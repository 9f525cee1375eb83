//! Experiment runner for `qpspec-core`.
//!
//! A run reads one JSON config ([`config::ExperimentConfig`]), executes a
//! subcommand on a private thread pool and writes a CSV table plus a JSON
//! manifest. Grid scans collect in index order, so tables are byte-identical
//! for any thread count.

pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod formats;
pub mod manifest;

pub use commands::{run, Command, Outcome};
pub use config::{ExperimentConfig, LoadedConfig};
pub use error::RunError;
pub use exec::RayonExecutor;

/// Environment variable that overrides the output directory (but not `--out`).
pub const OUT_DIR_ENV: &str = "QPSPEC_OUT_DIR";

/// `--out`, then `$QPSPEC_OUT_DIR`, then `outputs.dir` in the config, then `out`.
pub fn output_dir(flag: Option<&std::path::Path>, loaded: &LoadedConfig) -> std::path::PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return p.into();
    }
    match &loaded.config.outputs.dir {
        Some(d) => loaded.base_dir.join(d),
        None => "out".into(),
    }
}
