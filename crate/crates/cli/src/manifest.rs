//! JSON manifests written next to command outputs. Each one holds enough to
//! rerun the command that produced it.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerateManifest {
    pub version: String,
    pub seed: u64,
    pub count: usize,
    pub width: usize,
    pub height: usize,
    pub room_count: [usize; 2],
    pub room_size: [usize; 2],
    pub corridor_width: usize,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkManifest {
    pub version: String,
    pub corpus: PathBuf,
    /// Map file names inside `corpus`, in benchmark order.
    pub maps: Vec<String>,
    pub planners: Vec<String>,
    pub queries: usize,
    pub seed: u64,
    pub scope: f64,
    pub k_nearest: usize,
    pub tau: f64,
    pub ma_samples: usize,
    pub weights: Option<PathBuf>,
    pub failed_rows: usize,
    pub wall_time_s: f64,
}

pub fn write<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn read<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
