use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

/// Where workers get platform data from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlatformConfig {
    /// In-process simulator loaded from a world file.
    Sim { world: PathBuf },
    /// A simulator (or compatible service) reached over HTTP.
    Http { url: String },
    LiveStub,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Workers {
    pub discovery: usize,
    pub download: usize,
}

impl Default for Workers {
    fn default() -> Self {
        Self {
            discovery: 2,
            download: 2,
        }
    }
}

/// Run configuration, loaded from `--config` and overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub coordinator_url: Option<String>,
    pub platform: Option<PlatformConfig>,
    pub workers: Workers,
    pub lease_duration_s: f64,
    pub threshold: f64,
    pub cap: f64,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub max_pages: usize,
    pub corruption: f64,
    pub test_size: usize,
    pub train_max: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            coordinator_url: None,
            platform: None,
            workers: Workers::default(),
            lease_duration_s: 300.0,
            threshold: 2.0,
            cap: 20.0,
            out_dir: PathBuf::from("out"),
            seed: 0,
            max_pages: 10,
            corruption: 0.0,
            test_size: 1000,
            train_max: 1_000_000,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.threshold >= 0.0) {
            bail!("threshold must be >= 0");
        }
        if !(self.cap > 0.0) {
            bail!("cap must be > 0");
        }
        if !(self.lease_duration_s > 0.0) {
            bail!("lease duration must be > 0");
        }
        if !(0.0..=1.0).contains(&self.corruption) {
            bail!("corruption must be within [0, 1]");
        }
        if self.max_pages == 0 {
            bail!("max_pages must be >= 1");
        }
        Ok(())
    }
}
