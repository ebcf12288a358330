//! Channel-statistics cache and atomic file writes.
//!
//! Building the channel statistics is dominated by the Monte-Carlo
//! integration of the IRS correlation matrices, so the result is cached on
//! disk keyed by a content hash of exactly the scenario fields that influence
//! it: dimensions, geometry, phase-noise model, correlation settings, and the
//! seed (the integration is seeded). Power levels, impairment kappas, and
//! pilot lengths do not enter the key because they do not enter the
//! statistics.

use irsim::scenario::Scenario;
use irsim::{ChannelStatistics, Error, Result};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

/// Directory holding cached statistics; `IRSIM_CACHE_DIR` overrides the
/// default `.irsim-cache` under the working directory.
pub fn cache_dir() -> PathBuf {
    std::env::var_os("IRSIM_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".irsim-cache"))
}

/// Content hash over the statistics-relevant scenario fields.
pub fn stats_key(sc: &Scenario) -> String {
    let relevant = serde_json::json!({
        "m": sc.m,
        "n": sc.n,
        "k": sc.k,
        "phase_noise": sc.phase_noise,
        "geometry": sc.geometry,
        "bs_correlation": sc.bs_correlation,
        "spatial_correlation": sc.spatial_correlation,
        "corr_draws": sc.corr_draws,
        "seed": sc.seed,
    });
    let mut hasher = Sha256::new();
    hasher.update(relevant.to_string().as_bytes());
    hex::encode(hasher.finalize())
}

/// Loads the statistics from the cache or builds and stores them.
/// Returns the statistics, the cache key, and whether the cache hit.
pub fn load_or_build(sc: &Scenario) -> Result<(ChannelStatistics, String, bool)> {
    let key = stats_key(sc);
    let path = cache_dir().join(format!("{key}.json"));
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(stats) = serde_json::from_str::<ChannelStatistics>(&text) {
            if stats.h1.nrows() == sc.m && stats.h1.ncols() == sc.n && stats.r_irs.len() == sc.k {
                return Ok((stats, key, true));
            }
        }
        // unreadable or mismatched entry: fall through and rebuild
    }
    let stats = ChannelStatistics::build(sc)?;
    fs::create_dir_all(cache_dir())?;
    let text = serde_json::to_string(&stats)
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    atomic_write(&path, text.as_bytes())?;
    Ok((stats, key, false))
}

/// Writes a file atomically: temp file in the target directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
    }
    let dir = dir.unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    std::io::Write::write_all(&mut tmp, bytes)?;
    tmp.persist(path)
        .map_err(|e| Error::Io(e.error))
        .map(|_| ())
}
