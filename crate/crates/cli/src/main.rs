//! `runlmc` command-line entry point.
//!
//! Primary outputs are TSV (to `--out` or stdout) with a JSON companion next
//! to `--out`. A JSON footer with the config echo, seed, config hash and
//! timing goes to stderr. Exit code 1 means a usage error, 2 a data error.

mod args;
mod commands;
mod output;

use std::ffi::OsString;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{CommandFactory, FromArgMatches};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use args::Cli;

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "RUNLMC_THREADS";

/// Errors caused by the invocation rather than the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Appends `--key value` pairs from a JSON object so they override the
/// command line (last occurrence wins).
fn config_args(path: &Path) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let Value::Object(map) = value else {
        anyhow::bail!("config {} must hold a JSON object", path.display());
    };
    let mut out = Vec::new();
    for (key, v) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            Value::Bool(true) => out.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let parts: Vec<String> = items.iter().map(scalar).collect::<Result<_>>()?;
                out.push(flag.into());
                out.push(parts.join(",").into());
            }
            other => {
                out.push(flag.into());
                out.push(scalar(&other)?.into());
            }
        }
    }
    Ok(out)
}

fn scalar(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => anyhow::bail!("config values must be scalars or arrays of scalars"),
    }
}

fn command() -> clap::Command {
    Cli::command().args_override_self(true).mut_subcommands(|s| s.args_override_self(true))
}

/// Parses argv, then re-parses with the config file's entries appended.
fn parse(argv: Vec<OsString>) -> std::result::Result<Cli, ExitCode> {
    let usage = |e: clap::Error| {
        let code = if e.use_stderr() { 1 } else { 0 };
        let _ = e.print();
        ExitCode::from(code)
    };
    let first = command().try_get_matches_from(&argv).map_err(usage)?;
    let cli = Cli::from_arg_matches(&first).map_err(usage)?;
    let Some(path) = cli.global.config.clone() else { return Ok(cli) };
    let extra = config_args(&path).map_err(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })?;
    let mut full = argv;
    full.extend(extra);
    let matches = command().try_get_matches_from(&full).map_err(usage)?;
    Cli::from_arg_matches(&matches).map_err(usage)
}

/// SHA-256 of the config echo without the worker count, which never changes
/// results.
fn config_hash(config: &Value) -> String {
    let mut c = config.clone();
    if let Some(g) = c.get_mut("global").and_then(Value::as_object_mut) {
        g.remove("threads");
        g.remove("config");
    }
    let digest = Sha256::digest(serde_json::to_vec(&c).expect("config serializes"));
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(feature = "parallel")]
fn init_threads(n: usize) -> Result<usize> {
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("starting worker pool")?;
    }
    Ok(rayon::current_num_threads())
}

#[cfg(not(feature = "parallel"))]
fn init_threads(_n: usize) -> Result<usize> {
    Ok(1)
}

fn main() -> ExitCode {
    let cli = match parse(std::env::args_os().collect()) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let start = Instant::now();
    let config = serde_json::to_value(&cli).expect("config serializes");
    let ctx = output::Context { seed: cli.global.seed, config_hash: config_hash(&config), out: cli.global.out.clone() };
    let threads = match init_threads(cli.global.threads) {
        Ok(n) => n,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let result = commands::run(&cli, &ctx);
    let (status, code) = match &result {
        Ok(()) => ("ok", 0),
        Err(e) if e.downcast_ref::<UsageError>().is_some() => ("usage_error", 1),
        Err(_) => ("data_error", 2),
    };
    if let Err(e) = &result {
        eprintln!("error: {e:#}");
    }
    let footer = json!({
        "command": cli.command.name(),
        "config": config,
        "seed": cli.global.seed,
        "config_hash": ctx.config_hash,
        "threads": threads,
        "status": status,
        "elapsed_ms": start.elapsed().as_secs_f64() * 1e3,
    });
    eprintln!("{footer}");
    ExitCode::from(code)
}
