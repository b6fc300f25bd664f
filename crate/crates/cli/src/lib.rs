//! Configuration, orchestration and output for the `henon-spde` binary.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod output;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use config::{Config, ConfigError, RawConfig};
use manifest::Manifest;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Core(#[from] henon_spde::Error),

    #[error("checks failed: {0}")]
    ChecksFailed(String),

    #[error("picard iteration did not converge after {iterations} iterations (last distance {distance:e})")]
    NotConverged { iterations: usize, distance: f64 },

    #[error("output error: {0}")]
    Output(String),
}

impl RunError {
    /// 0 ok, 1 failed checks or I/O, 2 configuration, 3 unsupported branch,
    /// 4 infeasible, 5 divergence, 6 non-convergence.
    pub fn exit_code(&self) -> i32 {
        use henon_spde::Error as E;
        match self {
            RunError::Config(_) => 2,
            RunError::Core(e) => match e {
                E::UnsupportedBranch(_) => 3,
                E::Infeasible { .. } => 4,
                E::Divergence { .. } => 5,
                E::Io(_) | E::NotPositiveDefinite { .. } => 1,
                E::Domain(_) | E::Alignment(_) | E::Precondition(_) | E::Validation(_) | E::UnknownStrategy { .. } => 2,
            },
            RunError::ChecksFailed(_) | RunError::Output(_) => 1,
            RunError::NotConverged { .. } => 6,
        }
    }
}

pub struct RunContext {
    pub out: PathBuf,
    pub manifest: Manifest,
}

impl RunContext {
    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

pub const COMMANDS: [&str; 5] = ["validate-fbm", "validate-smoothing", "estimate-time", "simulate", "sweep"];

/// Runs `command` and returns the process exit code. The manifest is
/// written to `out/manifest.txt` whatever the outcome. `threads` is the raw
/// value of `HENON_SPDE_THREADS`.
pub fn execute(command: &str, config_path: &Path, seed: Option<u64>, out: &Path, threads: Option<String>) -> i32 {
    let start = Instant::now();
    let mut ctx = RunContext {
        out: out.to_path_buf(),
        manifest: Manifest::new(),
    };
    ctx.manifest.set("tool.name", env!("CARGO_PKG_NAME"));
    ctx.manifest.set("tool.version", env!("CARGO_PKG_VERSION"));
    ctx.manifest.set("run.command", command);
    ctx.manifest.set("run.config", config_path.display());
    let result = configure_threads(threads)
        .map_err(RunError::from)
        .and_then(|()| run(command, config_path, seed, &mut ctx));
    let code = match &result {
        Ok(()) => 0,
        Err(e) => e.exit_code(),
    };
    ctx.manifest.set("run.status", if code == 0 { "ok" } else { "failed" });
    ctx.manifest.set("run.exit_code", code);
    if let Err(e) = &result {
        ctx.manifest.set("run.error", e);
        eprintln!("henon-spde {command}: {e}");
    }
    ctx.manifest.set("run.wall_clock_seconds", format!("{:.3}", start.elapsed().as_secs_f64()));
    if let Err(e) = ctx.manifest.write_atomic(&out.join("manifest.txt")) {
        eprintln!("henon-spde: cannot write manifest: {e}");
        return if code == 0 { 1 } else { code };
    }
    code
}

fn run(command: &str, config_path: &Path, seed: Option<u64>, ctx: &mut RunContext) -> Result<(), RunError> {
    let specs = commands::schema(command).ok_or_else(|| ConfigError {
        line: None,
        message: format!("unknown command `{command}` (expected one of {})", COMMANDS.join(", ")),
    })?;
    let mut raw = RawConfig::read(config_path)?;
    if let Some(s) = seed {
        raw.set("seed", s.to_string());
    }
    let cfg = Config::resolve(&raw, &specs)?;
    for (k, v) in cfg.echo() {
        ctx.manifest.set(format!("config.{k}"), v);
    }
    std::fs::create_dir_all(&ctx.out).map_err(|e| RunError::Output(format!("{}: {e}", ctx.out.display())))?;
    output::write_text(&ctx.path("config.resolved"), &cfg.to_text())?;
    commands::dispatch(command, &cfg, ctx)
}

static POOL_SET: AtomicBool = AtomicBool::new(false);

/// Caps the global worker pool; `None` leaves rayon's default. Only the first
/// call in a process sizes the pool.
pub fn configure_threads(var: Option<String>) -> Result<(), ConfigError> {
    let Some(v) = var else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| ConfigError {
        line: None,
        message: format!("HENON_SPDE_THREADS must be a positive integer, got `{v}`"),
    })?;
    if POOL_SET.swap(true, Ordering::SeqCst) {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError {
            line: None,
            message: format!("cannot size the worker pool: {e}"),
        })
}
