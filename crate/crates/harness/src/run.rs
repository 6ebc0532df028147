//! Run a configuration: resolve, execute tasks on a sized thread pool, write
//! artifacts and the manifest.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{resolve, Command, ConfigError, ExperimentConfig, PresetName};
use crate::output::{FileEntry, Manifest, TaskRecord};
use crate::tasks::{run_task, Context};

/// Environment variable overriding the configured thread count.
pub const THREADS_ENV: &str = "QPJ_THREADS";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: PathBuf,
    /// Run only this command instead of the configured list.
    pub command: Option<Command>,
    pub threads: Option<usize>,
    /// Raw value of [`THREADS_ENV`], if set.
    pub env_threads: Option<String>,
    pub out: Option<PathBuf>,
    pub preset: Option<PresetName>,
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Io(anyhow::Error),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Io(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for RunError {}

#[derive(Debug)]
pub struct RunOutcome {
    /// 0 when every task succeeded, 2 otherwise.
    pub exit_code: i32,
    pub out_dir: PathBuf,
    pub manifest: Manifest,
}

/// Flag over environment over config; all cores when none is given.
pub fn thread_count(flag: Option<usize>, env: Option<&str>, config: Option<usize>) -> Result<usize, ConfigError> {
    let env = match env {
        Some(s) => Some(s.trim().parse::<usize>().map_err(|_| ConfigError::new(THREADS_ENV, format!("not a thread count: {s:?}")))?),
        None => None,
    };
    let n = flag.or(env).or(config).unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    if n == 0 {
        return Err(ConfigError::new("threads", "must be positive"));
    }
    Ok(n)
}

pub fn run(opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let started = Instant::now();
    let cfg = ExperimentConfig::load(&opts.config)?;
    let base = opts.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut resolved = resolve(&cfg, opts.preset, &base)?;
    if let Some(cmd) = opts.command {
        resolved.commands = vec![cmd];
    }
    let threads = thread_count(opts.threads, opts.env_threads.as_deref(), cfg.threads)?;
    let out_dir = match (&opts.out, &cfg.out) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => resolved.path(o),
        (None, None) => return Err(ConfigError::new("out", "no output directory (set `out` or pass --out)").into()),
    };
    std::fs::create_dir_all(&out_dir).map_err(|e| RunError::Io(anyhow::anyhow!("creating {}: {e}", out_dir.display())))?;

    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| RunError::Io(e.into()))?;
    let mut ctx = Context { cfg: &resolved, bad_set: None };
    let mut records = Vec::new();
    let mut grids = Vec::new();
    let mut written = BTreeSet::new();
    let mut any_failed = false;
    for &cmd in &resolved.commands {
        let t0 = Instant::now();
        let result = pool.install(|| run_task(cmd, &mut ctx));
        let mut rec = TaskRecord { name: cmd.name().into(), status: "ok".into(), message: None, files: Vec::new(), wall_clock_seconds: 0.0 };
        match result {
            Ok(out) => {
                for a in &out.artifacts {
                    if !written.insert(a.name.clone()) {
                        return Err(RunError::Io(anyhow::anyhow!("artifact {} written twice in one run", a.name)));
                    }
                    std::fs::write(out_dir.join(&a.name), &a.bytes).map_err(|e| RunError::Io(anyhow::anyhow!("writing {}: {e}", a.name)))?;
                    rec.files.push(FileEntry { path: a.name.clone(), sha256: a.sha256(), bytes: a.bytes.len() });
                }
                grids.extend(out.grids);
                if let Some(msg) = out.failed_checks {
                    rec.status = "checks-failed".into();
                    rec.message = Some(msg);
                }
            }
            Err(e) => {
                rec.status = "error".into();
                rec.message = Some(format!("{e:#}"));
            }
        }
        any_failed |= rec.status != "ok";
        rec.wall_clock_seconds = t0.elapsed().as_secs_f64();
        records.push(rec);
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: resolved.hash(),
        model_hash: resolved.model_hash.clone(),
        threads,
        grids,
        tasks: records,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    manifest.write(&out_dir).map_err(RunError::Io)?;
    Ok(RunOutcome { exit_code: if any_failed { 2 } else { 0 }, out_dir, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_precedence() {
        assert_eq!(thread_count(Some(3), Some("5"), Some(7)).unwrap(), 3);
        assert_eq!(thread_count(None, Some("5"), Some(7)).unwrap(), 5);
        assert_eq!(thread_count(None, None, Some(7)).unwrap(), 7);
        assert!(thread_count(None, Some("many"), None).is_err());
        assert!(thread_count(Some(0), None, None).is_err());
    }
}
