use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use quasijacobi_cli::run::THREADS_ENV;
use quasijacobi_cli::{run, Command, PresetName, RunError, RunOptions};

/// Finite-scale experiments on quasiperiodic Jacobi matrices.
#[derive(Parser, Debug)]
#[command(name = "quasijacobi", version)]
struct Cli {
    /// Run only this command; otherwise the config's `commands` list.
    #[arg(value_enum)]
    command: Option<Command>,
    /// TOML experiment config; relative paths inside it resolve against its directory
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (overrides QPJ_THREADS and the config).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (overrides `out` in the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parameter preset (overrides `preset` in the config)
    #[arg(long, value_enum)]
    preset: Option<PresetName>,
}

fn diagnostic(kind: &str, field: &str, message: &str) {
    let v = serde_json::json!({ "error": kind, "field": field, "message": message });
    eprintln!("{v}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            diagnostic("usage", "arguments", e.to_string().trim());
            return ExitCode::from(1);
        }
    };
    let opts = RunOptions {
        config: cli.config,
        command: cli.command,
        threads: cli.threads,
        env_threads: std::env::var(THREADS_ENV).ok(),
        out: cli.out,
        preset: cli.preset,
    };
    match run(&opts) {
        Ok(outcome) => {
            for t in &outcome.manifest.tasks {
                let msg = t.message.as_deref().unwrap_or("");
                eprintln!("{:<16} {:<14} {}", t.name, t.status, msg);
            }
            eprintln!("outputs in {}", outcome.out_dir.display());
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(RunError::Config(e)) => {
            diagnostic("config", &e.field, &e.message);
            ExitCode::from(1)
        }
        Err(RunError::Io(e)) => {
            diagnostic("io", "output", &format!("{e:#}"));
            ExitCode::from(1)
        }
    }
}
