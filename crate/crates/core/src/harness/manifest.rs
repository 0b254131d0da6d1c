//! Run manifests: everything needed to regenerate a run's outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::ProtectionMode;

use super::{Config, HarnessError};

pub const MANIFEST_FILE: &str = "manifest.toml";

/// A file and the SHA-256 of its bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    /// Hashes `file`, recording it under `recorded_as`.
    pub fn of(file: &Path, recorded_as: impl Into<String>) -> Result<Self, HarnessError> {
        Ok(Self { path: recorded_as.into(), sha256: sha256_file(file)? })
    }
}

pub fn sha256_file(path: &Path) -> Result<String, HarnessError> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// What was run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunSpec {
    Trim,
    Fly { scenario: String, mode: ProtectionMode },
    Sweep { mode: ProtectionMode, jobs: usize },
    Train { seed: u64 },
    Plot { input: FileDigest },
}

impl RunSpec {
    pub fn seed(&self) -> Option<u64> {
        match self {
            RunSpec::Train { seed } => Some(*seed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub git_describe: String,
    pub model_source: String,
    pub config_hash: String,
    pub run: RunSpec,
    /// Agent checkpoint the run evaluated, if any. The training seed that
    /// produced it is stored inside the checkpoint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<FileDigest>,
    /// Output files, paths relative to the output directory.
    pub outputs: Vec<FileDigest>,
    /// The effective configuration, overrides applied.
    pub config: Config,
}

impl Manifest {
    pub fn new(config: &Config, run: RunSpec, checkpoint: Option<FileDigest>) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            git_describe: git_describe(),
            model_source: config.airframe.aero.source_name(),
            config_hash: config.hash(),
            run,
            checkpoint,
            outputs: Vec::new(),
            config: config.clone(),
        }
    }

    /// Records the digests of `names` under `out_dir`, then writes the
    /// manifest next to them.
    /// Absolute input paths are rewritten relative to `out_dir`, so a run
    /// directory can be moved together with its inputs.
    pub fn finish(&mut self, out_dir: &Path, names: &[String]) -> Result<PathBuf, HarnessError> {
        let base = std::fs::canonicalize(out_dir)?;
        let inputs = self.checkpoint.iter_mut().chain(match &mut self.run {
            RunSpec::Plot { input } => Some(input),
            _ => None,
        });
        for input in inputs {
            let recorded = Path::new(&input.path);
            if recorded.is_absolute() {
                if let Some(rel) = pathdiff::diff_paths(recorded, &base) {
                    input.path = rel.to_string_lossy().into_owned();
                }
            }
        }
        self.outputs = names.iter().map(|n| FileDigest::of(&out_dir.join(n), n.clone())).collect::<Result<_, _>>()?;
        let path = out_dir.join(MANIFEST_FILE);
        let text = toml::to_string(self).map_err(|e| HarnessError::Config(format!("manifest: {e}")))?;
        std::fs::write(&path, text)?;
        Ok(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("reading {}: {e}", path.display())))?;
        let mut m: Manifest = toml::from_str(&text).map_err(|e| HarnessError::Config(format!("manifest: {e}")))?;
        m.config.airframe.aero.resolve_tables().map_err(|e| HarnessError::Config(e.to_string()))?;
        m.config.validate()?;
        if m.config.hash() != m.config_hash {
            return Err(HarnessError::Config("manifest config does not match its recorded hash".into()));
        }
        Ok(m)
    }
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["-C", env!("CARGO_MANIFEST_DIR"), "describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_string())
}
