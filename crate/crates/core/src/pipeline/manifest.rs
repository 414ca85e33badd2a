use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, SeasonSeeds};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FAILED_DIR: &str = "failed";

/// Top-level entries a run owns inside its output directory.
pub const RUN_ENTRIES: [&str; 6] = ["datasets", "detection", "checkpoints", "reports", "histograms", MANIFEST_FILE];

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    /// Season the stage ran for, or `None` for stages over the whole series.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scope: Option<String>,
    pub checksum: String,
}

/// Everything needed to tell whether two runs produced the same results.
/// Paths are relative to the output directory, and the output directory
/// itself is left out of the config echo.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, SeasonSeeds>,
    pub stages: Vec<StageRecord>,
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(config: &ExperimentConfig) -> Self {
        let mut echo = serde_json::to_value(config).expect("config serializes");
        if let Some(map) = echo.as_object_mut() {
            map.remove("output_dir");
        }
        Manifest {
            config: echo,
            seeds: BTreeMap::new(),
            stages: Vec::new(),
            files: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

/// Tracks the files a run writes and their checksums.
#[derive(Debug)]
pub struct Artifacts {
    root: PathBuf,
    pub manifest: Manifest,
    /// Files recorded since the last [`Artifacts::finish_stage`].
    pending: Vec<String>,
}

impl Artifacts {
    pub fn new(root: &Path, manifest: Manifest) -> Self {
        Artifacts {
            root: root.to_path_buf(),
            manifest,
            pending: Vec::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Creates parent directories of `rel` and returns its full path.
    pub fn prepare(&self, rel: &str) -> std::io::Result<PathBuf> {
        let path = self.path(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        Ok(path)
    }

    /// Hashes a file that has already been written.
    pub fn record(&mut self, rel: &str) -> std::io::Result<String> {
        let digest = sha256_hex(&fs::read(self.path(rel))?);
        self.manifest.files.insert(rel.to_string(), digest.clone());
        self.pending.push(rel.to_string());
        Ok(digest)
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> std::io::Result<String> {
        fs::write(self.prepare(rel)?, bytes)?;
        self.record(rel)
    }

    /// Closes a stage. Its checksum covers the files written since the
    /// previous stage plus `extra`, a digest of in-memory output for stages
    /// that write nothing.
    pub fn finish_stage(&mut self, stage: &str, scope: Option<String>, extra: &[u8]) {
        let mut hasher = Sha256::new();
        for rel in self.pending.drain(..) {
            hasher.update(rel.as_bytes());
            hasher.update(b"\0");
            hasher.update(self.manifest.files[&rel].as_bytes());
            hasher.update(b"\n");
        }
        hasher.update(extra);
        self.manifest.stages.push(StageRecord {
            stage: stage.to_string(),
            scope,
            checksum: hex::encode(hasher.finalize()),
        });
    }

    pub fn write_manifest(&self) -> std::io::Result<()> {
        fs::write(self.path(MANIFEST_FILE), self.manifest.to_json())
    }
}

/// Removes what an earlier run left behind so stale files cannot leak into
/// a new manifest.
pub fn clear_run_entries(root: &Path) -> std::io::Result<()> {
    for entry in RUN_ENTRIES.iter().chain([&FAILED_DIR]) {
        let path = root.join(entry);
        if path.is_dir() {
            fs::remove_dir_all(&path)?;
        } else if path.exists() {
            fs::remove_file(&path)?;
        }
    }
    Ok(())
}

/// Moves whatever the run wrote under `failed/` and records the cause.
pub fn quarantine(root: &Path, stage: &str, cause: &str) -> std::io::Result<PathBuf> {
    let failed = root.join(FAILED_DIR);
    fs::create_dir_all(&failed)?;
    for entry in RUN_ENTRIES {
        let from = root.join(entry);
        if from.exists() {
            fs::rename(&from, failed.join(entry))?;
        }
    }
    let record = serde_json::json!({ "stage": stage, "cause": cause });
    fs::write(failed.join("failure.json"), serde_json::to_string_pretty(&record)? + "\n")?;
    Ok(failed)
}
