//! Benchmark assets, evaluation runs and their on-disk artifacts.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub mod eval;
pub mod manifest;

pub use eval::{compare_runs, run_evaluation, ComparisonReport, EvalOptions, EvalReport, ScoreStatus};
pub use manifest::{
    load_asset, scan_assets, Manifest, ManifestEntry, RateConversion, Role, ScanResult, ScanRules,
    Scenario,
};

/// Writes `bytes` to a sibling temporary file and renames it over `path`, so
/// readers never observe a half-written artifact.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
