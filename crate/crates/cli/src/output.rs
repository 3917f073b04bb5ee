//! Report plumbing shared by the subcommands: versioned run reports and
//! atomic file writes (temp-then-rename, so failures never leave partial
//! output behind).

use anyhow::{Context, Result};
use serde::Serialize;
use std::path::Path;

/// Machine-readable record of one invocation. Deterministic for fixed
/// inputs and tool version, except for `wall_time_s`.
#[derive(Serialize)]
pub struct RunReport {
    pub format: u32,
    pub tool_version: &'static str,
    pub subcommand: &'static str,
    pub inputs: serde_json::Value,
    pub outputs: serde_json::Value,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn new(subcommand: &'static str, inputs: serde_json::Value) -> Self {
        RunReport {
            format: 1,
            tool_version: env!("CARGO_PKG_VERSION"),
            subcommand,
            inputs,
            outputs: serde_json::Value::Null,
            wall_time_s: 0.0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let stem = path.file_name().context("output path has no file name")?;
    let tmp_name = format!(".{}.tmp-{}", stem.to_string_lossy(), std::process::id());
    let tmp = match dir {
        Some(d) => d.join(&tmp_name),
        None => std::path::PathBuf::from(&tmp_name),
    };
    std::fs::write(&tmp, contents)
        .with_context(|| format!("writing temporary file {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("moving {} into place", path.display()))?;
    Ok(())
}

/// Reads RELU_SPAN_THREADS: unset means 1 (sequential), 0 means auto.
pub fn thread_cap() -> usize {
    match std::env::var("RELU_SPAN_THREADS") {
        Err(_) => 1,
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(0) => std::thread::available_parallelism().map_or(1, |n| n.get()),
            Ok(n) => n,
            Err(_) => 1,
        },
    }
}
