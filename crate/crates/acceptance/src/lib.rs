//! Bookkeeping for the acceptance binary: each criterion reports one verdict
//! line, and the process exit code is the conjunction of all verdicts.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use qpspec::{run, Command, LoadedConfig, Outcome, RunError};

#[derive(Debug, Clone)]
pub struct Verdict {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl Verdict {
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        format!(
            "{status} {:>2} {:<28} {} [{:.1}s of {}s]",
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        )
    }
}

/// Outcome of one criterion body: pass flag and a one-line detail.
pub type Check = (bool, String);

#[derive(Default)]
pub struct Suite {
    verdicts: Vec<Verdict>,
}

impl Suite {
    pub fn new() -> Self {
        Self::default()
    }

    /// Runs `body`, prints its verdict line immediately, and records it.
    /// Exceeding the budget is reported in the detail but does not fail the criterion.
    pub fn criterion(&mut self, id: u32, name: &'static str, budget_s: u64, body: impl FnOnce() -> Check) {
        let start = Instant::now();
        let (passed, mut detail) = body();
        let elapsed = start.elapsed();
        let budget = Duration::from_secs(budget_s);
        if elapsed > budget {
            detail.push_str(" (over budget)");
        }
        let v = Verdict {
            id,
            name,
            passed,
            detail,
            elapsed,
            budget,
        };
        println!("{}", v.line());
        self.verdicts.push(v);
    }

    pub fn verdicts(&self) -> &[Verdict] {
        &self.verdicts
    }

    pub fn finish(self) -> ExitCode {
        let failed: Vec<u32> = self.verdicts.iter().filter(|v| !v.passed).map(|v| v.id).collect();
        println!(
            "acceptance: {} passed, {} failed{}",
            self.verdicts.len() - failed.len(),
            failed.len(),
            if failed.is_empty() {
                String::new()
            } else {
                format!(" {failed:?}")
            }
        );
        if failed.is_empty() {
            ExitCode::SUCCESS
        } else {
            ExitCode::FAILURE
        }
    }
}

/// Shipped experiment configs, relative to the workspace root.
pub fn config_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Loads a shipped config, applies `edit` to its JSON, pins the thread count
/// and runs `cmd` into `out`.
pub fn run_shipped(
    cmd: Command,
    file: &str,
    threads: usize,
    out: &std::path::Path,
    edit: impl FnOnce(&mut serde_json::Value),
) -> Result<Outcome, RunError> {
    let path = config_dir().join(file);
    let text = std::fs::read_to_string(&path).map_err(|e| RunError::Numerics(format!("{}: {e}", path.display())))?;
    let mut raw: serde_json::Value = serde_json::from_str(&text).map_err(|e| RunError::Numerics(e.to_string()))?;
    edit(&mut raw);
    raw["verify"] = false.into();
    let mut loaded = LoadedConfig::from_value(raw, config_dir())?;
    loaded.override_threads(threads)?;
    run(cmd, &loaded, out)
}
