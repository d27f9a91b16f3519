//! CSV and JSON writers, and the run manifest.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

use super::config::ExperimentConfig;

pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Shortest representation that round-trips.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn config_hash(config: &ExperimentConfig) -> Result<String> {
    let canonical = serde_json::to_string(config)?;
    let digest = Sha256::digest(canonical.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub library: &'static str,
    pub version: &'static str,
    pub experiment: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub model: crate::covariance::CovarianceConfig,
    pub n: usize,
    pub d: usize,
    #[serde(rename = "M")]
    pub paths: usize,
    pub files: &'a [PathBuf],
    /// Seconds since the Unix epoch; the only field that varies between runs.
    pub timestamp: u64,
}

pub fn write_manifest(dir: &Path, config: &ExperimentConfig, files: &[PathBuf]) -> Result<PathBuf> {
    let experiment = config.experiment()?;
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let m = Manifest {
        library: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: experiment.name(),
        config_sha256: config_hash(config)?,
        seed: config.seed(),
        model: config.covariance(),
        n: config.n(),
        d: config.d(),
        paths: config.paths(),
        files,
        timestamp,
    };
    let path = dir.join("manifest.json");
    write_json(&path, &m)?;
    Ok(path)
}
