//! Dispatch to the experiment runners and bookkeeping of the run directory.

use std::path::{Path, PathBuf};

use crate::config::{snapshot, ExperimentConfig, Kind};
use crate::error::{LabError, Result};
use crate::experiments::{deficit, gradsim, lindyn, rsv_sim, sweep};
use crate::manifest::{now_ms, prepare_dir, scan, sha256_hex, write_file, RunManifest, Status};
use crate::report;

pub const TOOL: &str = "critfuse";
pub const CONFIG_SNAPSHOT: &str = "config.toml";

fn finish(dir: &Path, kind: &str, config_hash: String, started: u64, outcome: Result<()>) -> Result<RunManifest> {
    let files = scan(dir)?;
    let manifest = RunManifest {
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kind: kind.into(),
        config_hash,
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        status: if outcome.is_ok() { Status::Ok } else { Status::Failed },
        error: outcome.as_ref().err().map(|e| e.to_string()),
        files,
    };
    manifest.write(dir)?;
    outcome.map(|_| manifest)
}

/// Runs one experiment into `out`. `base` resolves relative paths in the
/// config. A failed computation still leaves a manifest flagged `failed`.
pub fn execute(kind: Kind, config: &ExperimentConfig, base: &Path, out: &Path, overwrite: bool) -> Result<RunManifest> {
    if let Some(k) = config.kind {
        if k != kind {
            return Err(LabError::config(format!(
                "config kind `{}` does not match subcommand `{}`",
                k.name(),
                kind.name()
            )));
        }
    }
    config.validate()?;
    let text = snapshot(config)?;
    let hash = sha256_hex(text.as_bytes());
    let started = now_ms();
    prepare_dir(out, overwrite)?;
    write_file(&out.join(CONFIG_SNAPSHOT), &text)?;
    log::info!("{} run into {}", kind.name(), out.display());
    let outcome = match kind {
        Kind::Lindyn => lindyn::run(&config.lindyn, base, out),
        Kind::Gradsim => gradsim::run(&config.gradsim, config.seed, base, out),
        Kind::RsvSim => rsv_sim::run(&config.rsv_sim, base, out),
        Kind::Deficit => deficit::run(&config.deficit, config.write_dataset, config.write_activations, out).map(|_| ()),
        Kind::Sweep => sweep::run_sweep(&config.deficit, &config.sweep, config.seed, config.jobs, out).map(|_| ()),
    };
    finish(out, kind.name(), hash, started, outcome)
}

/// Report over finished run directories.
pub fn execute_report(dirs: &[PathBuf], out: &Path, overwrite: bool) -> Result<RunManifest> {
    let listing: Vec<String> = dirs.iter().map(|d| d.display().to_string()).collect();
    let hash = sha256_hex(listing.join("\n").as_bytes());
    for d in dirs {
        if out.starts_with(d) || d.starts_with(out) {
            return Err(LabError::config(format!(
                "report output {} overlaps input {}",
                out.display(),
                d.display()
            )));
        }
    }
    // Inputs are read before the output directory is touched.
    let mut rows = Vec::new();
    for d in dirs {
        rows.extend(report::load_runs(d)?);
    }
    report::compare(&rows)?;
    let started = now_ms();
    prepare_dir(out, overwrite)?;
    let outcome = report::report(dirs, out);
    finish(out, "report", hash, started, outcome)
}

/// Default run directory: `<root>/<kind>-<first 12 hex digits of the config hash>`.
pub fn default_out(root: &Path, kind: &str, config_text: &str) -> PathBuf {
    root.join(format!("{kind}-{}", &sha256_hex(config_text.as_bytes())[..12]))
}
