//! Batch driver for the `clusterlr` library: JSON config in, CSV/JSON out.
//!
//! Exit codes: `0` success, `2` when a scientific validity window is
//! violated, `1` for configuration, I/O and internal errors.

pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clusterlr::bounds::ConstantsMode;

use config::RunConfig;
use output::{sha256_hex, write_atomic, FileEntry, Manifest, PhaseTime, Table};

/// Environment variable that sets the worker count when `--threads` is absent.
pub const THREADS_ENV: &str = "CLUSTERLR_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Library(clusterlr::Error),
    #[error("i/o error: {0}")]
    Io(String),
    /// A verification suite failed.
    #[error("check failed: {0}")]
    Failed(String),
}

impl RunError {
    pub fn config(msg: impl Into<String>) -> Self {
        RunError::Config(msg.into())
    }

    pub fn io(e: impl std::fmt::Display) -> Self {
        RunError::Io(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Library(e) if e.is_validity() => 2,
            _ => 1,
        }
    }
}

/// What a command produced. `failure` marks a run that stopped early; the
/// tables then hold the rows finished before the error.
#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<(String, Table)>,
    pub documents: Vec<(String, serde_json::Value)>,
    pub warnings: Vec<String>,
    pub phases: Vec<PhaseTime>,
    pub failure: Option<RunError>,
}

impl Outcome {
    pub fn table(name: impl Into<String>, t: Table) -> Self {
        Outcome { tables: vec![(name.into(), t)], ..Default::default() }
    }
}

/// Invocation settings shared by every command.
#[derive(Clone, Debug)]
pub struct Invocation {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub mode: Option<ConstantsMode>,
}

fn resolve_threads(flag: Option<usize>) -> Result<usize, RunError> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| RunError::config(format!("{THREADS_ENV} must be an integer, got `{v}`"))),
        Err(_) => Ok(0),
    }
}

/// Runs `expected` (or whatever the config names when `None`) and writes
/// all artifacts. Returns the process exit code.
pub fn execute(expected: Option<config::Command>, inv: &Invocation) -> i32 {
    match execute_inner(expected, inv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute_inner(expected: Option<config::Command>, inv: &Invocation) -> Result<i32, RunError> {
    let started = Instant::now();
    let cfg = RunConfig::load(&inv.config)?.with_overrides(inv.seed, inv.mode);
    if let Some(cmd) = expected {
        if cmd != cfg.command {
            return Err(RunError::config(format!(
                "config is for `{}`, not `{}`",
                cfg.command.name(),
                cmd.name()
            )));
        }
    }
    let threads = resolve_threads(inv.threads)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| RunError::Io(e.to_string()))?;
    std::fs::create_dir_all(&inv.out).map_err(RunError::io)?;

    let outcome = pool.install(|| commands::run(&cfg));
    let mut outcome = match outcome {
        Ok(o) => o,
        // Nothing was produced; still leave a manifest behind.
        Err(e) => Outcome { failure: Some(e), ..Default::default() },
    };

    let mut files = Vec::new();
    for (name, table) in &outcome.tables {
        if table.rows.is_empty() && outcome.failure.is_some() {
            continue;
        }
        let bytes = table.to_bytes()?;
        write_atomic(&inv.out, name, &bytes)?;
        files.push(FileEntry { name: name.clone(), sha256: sha256_hex(&bytes), rows: Some(table.rows.len()) });
    }
    for (name, doc) in &outcome.documents {
        let mut bytes = serde_json::to_vec_pretty(doc).map_err(RunError::io)?;
        bytes.push(b'\n');
        write_atomic(&inv.out, name, &bytes)?;
        files.push(FileEntry { name: name.clone(), sha256: sha256_hex(&bytes), rows: None });
    }

    let config_json = serde_json::to_value(&cfg).map_err(RunError::io)?;
    let canonical = serde_json::to_vec(&config_json).map_err(RunError::io)?;
    let exit_code = outcome.failure.as_ref().map_or(0, RunError::exit_code);
    outcome.phases.push(PhaseTime { phase: "total".into(), seconds: started.elapsed().as_secs_f64() });
    let manifest = Manifest {
        command: cfg.command.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        library_version: clusterlr::VERSION.into(),
        config_sha256: sha256_hex(&canonical),
        seed: cfg.seed(),
        threads: pool.current_num_threads(),
        config: config_json,
        outputs: files,
        wall_times: outcome.phases,
        truncated: outcome.failure.is_some() && outcome.tables.iter().any(|(_, t)| !t.rows.is_empty()),
        exit_code,
        error: outcome.failure.as_ref().map(|e| e.to_string()),
        warnings: outcome.warnings,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(RunError::io)?;
    bytes.push(b'\n');
    write_atomic(&inv.out, &cfg.outputs.manifest, &bytes)?;
    if let Some(e) = &outcome.failure {
        eprintln!("error: {e}");
    }
    Ok(exit_code)
}

/// Reads a manifest back, for tests and tooling.
pub fn read_manifest(dir: &Path, name: &str) -> Result<serde_json::Value, RunError> {
    let text = std::fs::read_to_string(dir.join(name)).map_err(RunError::io)?;
    serde_json::from_str(&text).map_err(RunError::io)
}
