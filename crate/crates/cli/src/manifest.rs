//! Run manifests: every output-writing command records what ran, with
//! which seed and inputs, and when. Timestamps live only here, so the
//! primary outputs stay byte-reproducible.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::formats::{write_atomic, FORMAT_VERSION};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    /// The invoked subcommand and flags.
    pub command: String,
    /// Digest of the effective configuration (flags plus loaded config).
    pub config_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tool_version: String,
    pub created_unix_seconds: u64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

fn digest_file(path: &Path) -> Result<FileDigest, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::input_at(path, e))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

pub struct ManifestBuilder {
    command: String,
    config_digest: String,
    seed: Option<u64>,
    inputs: Vec<FileDigest>,
    outputs: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            config_digest: String::new(),
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Digest any serializable effective-config value.
    pub fn config<T: Serialize>(mut self, config: &T) -> Self {
        let json = serde_json::to_vec(config).unwrap_or_default();
        self.config_digest = sha256_hex(&json);
        self
    }

    pub fn input(mut self, path: &Path) -> Result<Self, CliError> {
        self.inputs.push(digest_file(path)?);
        Ok(self)
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    /// Writes `<manifest_path>` and returns the manifest.
    pub fn write(self, manifest_path: &Path) -> Result<RunManifest, CliError> {
        let created = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = RunManifest {
            format_version: FORMAT_VERSION,
            command: self.command,
            config_digest: self.config_digest,
            seed: self.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix_seconds: created,
            inputs: self.inputs,
            outputs: self
                .outputs
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::input_at(manifest_path, e))?;
        text.push('\n');
        write_atomic(manifest_path, text.as_bytes())?;
        Ok(manifest)
    }
}

/// Manifest path for a primary output file: `<file>.manifest.json`.
pub fn manifest_path_for(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}
