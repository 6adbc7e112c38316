//! Run manifest: what a run produced, stage by stage, with content
//! hashes so any later reader can prove the artifacts are the ones the
//! run wrote.
//!
//! Line-oriented like the config: a `config_hash` and
//! `toolkit_version` preamble, then one `[stage NAME]` block per
//! executed stage holding its wall-clock and one
//! `artifact = <relative path> sha256=<hex>` line per file written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Lowercase hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        write!(hex, "{byte:02x}").unwrap();
    }
    hex
}

/// Hash a file's contents.
pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// One file a stage wrote, addressed relative to the run directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactRecord {
    pub rel_path: String,
    pub sha256: String,
}

/// One executed stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageRecord {
    pub name: String,
    pub wall_ms: u64,
    pub artifacts: Vec<ArtifactRecord>,
}

/// The full record of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub config_hash: String,
    pub toolkit_version: String,
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    pub fn new(config_hash: String) -> Self {
        Self {
            config_hash,
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            stages: Vec::new(),
        }
    }

    /// Every artifact across all stages, in write order.
    pub fn artifacts(&self) -> impl Iterator<Item = &ArtifactRecord> {
        self.stages.iter().flat_map(|s| s.artifacts.iter())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "config_hash = {}", self.config_hash).unwrap();
        writeln!(out, "toolkit_version = {}", self.toolkit_version).unwrap();
        for stage in &self.stages {
            writeln!(out).unwrap();
            writeln!(out, "[stage {}]", stage.name).unwrap();
            writeln!(out, "wall_ms = {}", stage.wall_ms).unwrap();
            for artifact in &stage.artifacts {
                writeln!(
                    out,
                    "artifact = {} sha256={}",
                    artifact.rel_path, artifact.sha256
                )
                .unwrap();
            }
        }
        out
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let bad = |line: usize, detail: String| CliError::Artifact {
            path: origin.to_path_buf(),
            detail: format!("line {line}: {detail}"),
        };

        let mut config_hash = None;
        let mut toolkit_version = None;
        let mut stages: Vec<StageRecord> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(name) = trimmed.strip_prefix("[stage ") {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| bad(line, format!("unterminated header `{trimmed}`")))?;
                stages.push(StageRecord {
                    name: name.to_string(),
                    wall_ms: 0,
                    artifacts: Vec::new(),
                });
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| bad(line, format!("expected `key = value`, got `{trimmed}`")))?;
            match (key, stages.last_mut()) {
                ("config_hash", None) => config_hash = Some(value.to_string()),
                ("toolkit_version", None) => toolkit_version = Some(value.to_string()),
                ("wall_ms", Some(stage)) => {
                    stage.wall_ms = value
                        .parse()
                        .map_err(|e| bad(line, format!("wall_ms: {e}")))?;
                }
                ("artifact", Some(stage)) => {
                    let (rel_path, sha) = value
                        .rsplit_once(" sha256=")
                        .ok_or_else(|| bad(line, format!("artifact line lacks sha256: `{value}`")))?;
                    stage.artifacts.push(ArtifactRecord {
                        rel_path: rel_path.to_string(),
                        sha256: sha.to_string(),
                    });
                }
                _ => return Err(bad(line, format!("unexpected key `{key}` here"))),
            }
        }

        Ok(Self {
            config_hash: config_hash
                .ok_or_else(|| bad(0, "missing config_hash".into()))?,
            toolkit_version: toolkit_version
                .ok_or_else(|| bad(0, "missing toolkit_version".into()))?,
            stages,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render()).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Check that every listed artifact exists under `root` with the
    /// recorded content hash.
    pub fn verify(&self, root: &Path) -> Result<()> {
        for artifact in self.artifacts() {
            let path = root.join(&artifact.rel_path);
            if !path.is_file() {
                return Err(CliError::ManifestMismatch {
                    path,
                    detail: "listed artifact is missing".into(),
                });
            }
            let actual = hash_file(&path)?;
            if actual != artifact.sha256 {
                return Err(CliError::ManifestMismatch {
                    path,
                    detail: format!(
                        "content hash {actual} differs from recorded {}",
                        artifact.sha256
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Record a finished stage: hash the files it wrote (as paths relative
/// to `root`) and append a stage entry.
pub fn record_stage(
    manifest: &mut RunManifest,
    root: &Path,
    name: &str,
    wall_ms: u64,
    files: &[PathBuf],
) -> Result<()> {
    let mut artifacts = Vec::with_capacity(files.len());
    for file in files {
        let rel = file
            .strip_prefix(root)
            .unwrap_or(file)
            .to_string_lossy()
            .replace('\\', "/");
        artifacts.push(ArtifactRecord {
            rel_path: rel,
            sha256: hash_file(file)?,
        });
    }
    manifest.stages.push(StageRecord {
        name: name.to_string(),
        wall_ms,
        artifacts,
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parse_round_trip() {
        let mut manifest = RunManifest::new("abc123".into());
        manifest.stages.push(StageRecord {
            name: "synth".into(),
            wall_ms: 42,
            artifacts: vec![ArtifactRecord {
                rel_path: "dataset.bin".into(),
                sha256: sha256_hex(b"payload"),
            }],
        });
        let text = manifest.render();
        let back = RunManifest::parse(&text, Path::new("m")).unwrap();
        assert_eq!(back, manifest);
    }

    #[test]
    fn verify_passes_on_intact_files_and_catches_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("dataset.bin");
        fs::write(&file, b"original").unwrap();

        let mut manifest = RunManifest::new("h".into());
        record_stage(&mut manifest, dir.path(), "synth", 1, &[file.clone()]).unwrap();
        manifest.verify(dir.path()).unwrap();

        fs::write(&file, b"edited").unwrap();
        let err = manifest.verify(dir.path()).unwrap_err();
        assert!(matches!(err, CliError::ManifestMismatch { .. }), "{err}");

        fs::remove_file(&file).unwrap();
        let err = manifest.verify(dir.path()).unwrap_err();
        assert!(err.to_string().contains("missing"), "{err}");
    }

    #[test]
    fn sha256_matches_the_known_empty_string_digest() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
