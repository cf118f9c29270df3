//! Optional JSON configuration file. Every key mirrors a long flag name with
//! `_` in place of `-`; flags given on the command line take precedence.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

pub const SEED_ENV: &str = "SPECTRAL_SCOPE_SEED";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    // graph
    pub model: Option<String>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub directed: Option<bool>,
    pub weights: Option<[f64; 2]>,
    pub kind: Option<String>,
    pub graph_out: Option<PathBuf>,
    pub matrix_out: Option<PathBuf>,
    // dynamics
    pub matrix: Option<PathBuf>,
    pub mode: Option<String>,
    pub tau: Option<f64>,
    pub k: Option<usize>,
    pub observe: Option<String>,
    pub x0: Option<String>,
    pub node_d: Option<usize>,
    pub node_seed: Option<u64>,
    pub node_file: Option<PathBuf>,
    pub out: Option<PathBuf>,
    // estimator
    pub rank_tolerance: Option<f64>,
    pub cluster_tol: Option<f64>,
    pub prescale: Option<String>,
    pub online: Option<bool>,
    // verification and batches
    pub tol: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub negate: Option<bool>,
    pub seeds: Option<u64>,
    pub start: Option<u64>,
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// `SPECTRAL_SCOPE_SEED`, then the flag, then the file.
    pub fn seed(&self, flag: Option<u64>) -> Result<Option<u64>> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            let seed = v
                .trim()
                .parse()
                .with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer"))?;
            return Ok(Some(seed));
        }
        Ok(flag.or(self.seed))
    }
}
