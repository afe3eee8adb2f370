//! Run-directory bookkeeping: artifact writes, checksums, and manifests.
//!
//! A run directory is append-only. Every write refuses to replace an existing
//! file, and each subcommand leaves a manifest naming its artifacts with
//! their SHA-256 digests, so any later reader can verify a run byte-by-byte.

use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::SCHEMA_VERSION;
use crate::errors::CliError;

/// One file written by a subcommand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the run directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// What a subcommand did: its inputs' provenance and its outputs' digests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    /// Digest of the effective config the command ran with.
    pub config_sha256: String,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Serializes pretty JSON with a trailing newline (the one format every JSON
/// artifact in the run directory uses).
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable artifact");
    bytes.push(b'\n');
    bytes
}

/// An open run directory accumulating one subcommand's artifacts.
pub struct RunDir {
    root: PathBuf,
    written: Vec<Artifact>,
}

impl RunDir {
    /// Opens (creating if needed) the run directory.
    pub fn open(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)
            .map_err(|source| CliError::WriteFile { path: root.to_owned(), source })?;
        Ok(RunDir { root: root.to_owned(), written: Vec::new() })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Fails if `command` already left a manifest here; call before any work.
    pub fn ensure_not_ran(&self, command: &str) -> Result<(), CliError> {
        let rel = manifest_rel(command);
        let path = self.path(&rel);
        if path.exists() {
            return Err(CliError::CommandAlreadyRan { command: command.to_owned(), path });
        }
        Ok(())
    }

    /// Writes one artifact, refusing to overwrite, and records its digest.
    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.path(rel);
        if path.exists() {
            return Err(CliError::ArtifactExists { path });
        }
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|source| CliError::WriteFile { path: parent.to_owned(), source })?;
        }
        std::fs::write(&path, bytes).map_err(|source| CliError::WriteFile { path, source })?;
        self.written.push(Artifact {
            path: rel.to_owned(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), CliError> {
        self.write_bytes(rel, &to_json_bytes(value))
    }

    /// Reads a JSON artifact produced by an earlier subcommand.
    pub fn read_json<T: DeserializeOwned>(
        &self,
        rel: &str,
        what: &str,
        producer: &str,
    ) -> Result<T, CliError> {
        let bytes = self.read_bytes(rel, what, producer)?;
        serde_json::from_slice(&bytes).map_err(|err| CliError::MalformedArtifact {
            path: self.path(rel),
            message: err.to_string(),
        })
    }

    pub fn read_bytes(&self, rel: &str, what: &str, producer: &str) -> Result<Vec<u8>, CliError> {
        let path = self.path(rel);
        if !path.exists() {
            return Err(CliError::MissingArtifact {
                what: what.to_owned(),
                path,
                producer: producer.to_owned(),
            });
        }
        std::fs::read(&path).map_err(|source| CliError::ReadFile { path, source })
    }

    /// Echoes the effective config, writes the manifest, and closes the run.
    pub fn finish<C: Serialize>(
        mut self,
        command: &str,
        seed: u64,
        config: &C,
    ) -> Result<Manifest, CliError> {
        let config_bytes = to_json_bytes(config);
        let config_sha256 = sha256_hex(&config_bytes);
        self.write_bytes(&format!("config/{command}.json"), &config_bytes)?;
        let mut artifacts = std::mem::take(&mut self.written);
        artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            command: command.to_owned(),
            seed,
            config_sha256,
            artifacts,
        };
        self.write_bytes(&manifest_rel(command), &to_json_bytes(&manifest))?;
        Ok(manifest)
    }
}

pub fn manifest_rel(command: &str) -> String {
    format!("manifest/{command}.json")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_are_append_only_and_checksummed() {
        let dir = tempfile::tempdir().unwrap();
        let mut run = RunDir::open(dir.path()).unwrap();
        run.write_bytes("a/b.txt", b"hello\n").unwrap();
        let err = run.write_bytes("a/b.txt", b"other").unwrap_err();
        assert!(matches!(err, CliError::ArtifactExists { .. }));

        let manifest = run.finish("demo", 7, &serde_json::json!({"k": 1})).unwrap();
        assert_eq!(manifest.command, "demo");
        assert_eq!(manifest.artifacts.len(), 2);
        assert_eq!(
            manifest.artifacts[0].sha256,
            sha256_hex(&std::fs::read(dir.path().join("a/b.txt")).unwrap())
        );

        let run = RunDir::open(dir.path()).unwrap();
        let err = run.ensure_not_ran("demo").unwrap_err();
        assert!(matches!(err, CliError::CommandAlreadyRan { .. }));
    }

    #[test]
    fn missing_artifact_error_names_the_producer() {
        let dir = tempfile::tempdir().unwrap();
        let run = RunDir::open(dir.path()).unwrap();
        let err = run.read_json::<Manifest>("models/rf.json", "model", "train").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("model not found"), "{text}");
        assert!(text.contains("train"), "{text}");
    }
}
