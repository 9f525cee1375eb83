use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qpspec::{output_dir, run, Command, LoadedConfig, RunError};

/// Quasi-periodic Schrödinger operator experiments.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; beats QPSPEC_OUT_DIR and outputs.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides `threads` in the config.
    #[arg(long)]
    threads: Option<usize>,
    /// Seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(cli: &Cli) -> Result<(), RunError> {
    let mut loaded = LoadedConfig::from_path(&cli.config)?;
    if let Some(t) = cli.threads {
        loaded.override_threads(t)?;
    }
    if let Some(s) = cli.seed {
        loaded.override_seed(s);
    }
    let dir = output_dir(cli.out.as_deref(), &loaded);
    let outcome = run(cli.command, &loaded, &dir)?;
    for c in &outcome.checks {
        let mark = if c.passed { "ok  " } else { "FAIL" };
        eprintln!("{mark} {}: {}", c.name, c.detail);
    }
    println!("{}", outcome.csv.display());
    println!("{}", outcome.manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
