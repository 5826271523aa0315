//! Run configuration and report persistence: every experiment emits a JSON
//! report embedding the fully resolved configuration and the artifact
//! version, with wall-clock data segregated into a metadata block so that
//! reports are byte-identical across reruns with the same seed.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::kinematic::SampleRow;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "CPNK_OUTPUT_DIR";

/// Fully resolved run configuration, echoed verbatim into every report.
/// Unknown keys in a config file are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: String,
    pub n: usize,
    pub master_seed: u64,
    pub samples: usize,
    pub count_grid: usize,
    pub volume_grid: usize,
    pub pairs: usize,
    pub draws: usize,
    pub pair: String,
    pub model: String,
    pub n_max: usize,
    pub hamiltonian: Option<String>,
    pub time: f64,
    pub step: f64,
    pub threads: Option<usize>,
    pub output_dir: Option<String>,
    pub format: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            n: 2,
            master_seed: 0,
            samples: 200,
            count_grid: 48,
            volume_grid: 64,
            pairs: 5,
            draws: 10_000,
            pair: "clifford:clifford".into(),
            model: "clifford".into(),
            n_max: 8,
            hamiltonian: None,
            time: 0.3,
            step: 1e-2,
            threads: None,
            output_dir: None,
            format: "json".into(),
        }
    }
}

impl RunConfig {
    /// Parses a TOML config file; unknown keys are an error.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| GeomError::UnsupportedModel {
            reason: format!("cannot read config {}: {e}", path.display()),
        })?;
        toml::from_str(&text).map_err(|e| GeomError::UnsupportedModel {
            reason: format!("invalid config {}: {e}", path.display()),
        })
    }

    /// Output directory resolution order: explicit config, environment
    /// variable, current directory.
    pub fn resolved_output_dir(&self) -> PathBuf {
        if let Some(dir) = &self.output_dir {
            return PathBuf::from(dir);
        }
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                return PathBuf::from(dir);
            }
        }
        PathBuf::from(".")
    }
}

/// Wall-clock facts about a run, excluded from determinism comparisons.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub timestamp_unix_secs: u64,
    pub wall_seconds: f64,
}

impl Metadata {
    pub fn now(wall_seconds: f64) -> Self {
        let timestamp_unix_secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Metadata {
            timestamp_unix_secs,
            wall_seconds,
        }
    }
}

/// Report envelope: version + config + result, with volatile fields in
/// `metadata` only.
#[derive(Debug, Clone, Serialize)]
pub struct Report<T: Serialize> {
    pub version: String,
    pub config: RunConfig,
    pub result: T,
    pub metadata: Metadata,
}

impl<T: Serialize> Report<T> {
    pub fn new(config: RunConfig, result: T, wall_seconds: f64) -> Self {
        Report {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            result,
            metadata: Metadata::now(wall_seconds),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    pub fn write(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| GeomError::UnsupportedModel {
            reason: format!("cannot create {}: {e}", dir.display()),
        })?;
        let path = dir.join(format!("{stem}_report.json"));
        fs::write(&path, self.to_json()).map_err(|e| GeomError::UnsupportedModel {
            reason: format!("cannot write {}: {e}", path.display()),
        })?;
        Ok(path)
    }
}

/// Streaming CSV sample log: one row per Haar sample, flushed immediately
/// so partial results survive interruption.
pub struct SampleLog {
    file: fs::File,
    pub path: PathBuf,
}

impl SampleLog {
    pub fn create(dir: &Path, stem: &str) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| GeomError::UnsupportedModel {
            reason: format!("cannot create {}: {e}", dir.display()),
        })?;
        let path = dir.join(format!("{stem}_samples.csv"));
        let mut file = fs::File::create(&path).map_err(|e| GeomError::UnsupportedModel {
            reason: format!("cannot write {}: {e}", path.display()),
        })?;
        writeln!(file, "sample_index,count,min_sigma,flag,seconds").ok();
        Ok(SampleLog { file, path })
    }

    pub fn push(&mut self, row: &SampleRow) {
        let flag = match row.flag {
            crate::intersect::Flag::Clean => "clean",
            crate::intersect::Flag::NearDegenerate => "near_degenerate",
            crate::intersect::Flag::Failed => "failed",
        };
        writeln!(
            self.file,
            "{},{},{:.17e},{},{:.6}",
            row.sample_index, row.count, row.min_sigma, flag, row.seconds
        )
        .ok();
        self.file.flush().ok();
    }
}
