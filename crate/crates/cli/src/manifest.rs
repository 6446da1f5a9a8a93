//! Run manifests: what was run, what it produced, and content hashes for
//! the artifacts so reruns can be compared byte for byte. Stage timings are
//! recorded in the manifest only and never enter any hashed artifact.

use crate::error::AppError;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Serialize)]
pub struct ArtifactRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    /// Fingerprint of the resolved problem spec.
    pub spec: String,
    pub descriptor: String,
    pub parameters: serde_json::Value,
    pub artifacts: Vec<ArtifactRecord>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &'static str, spec: String, descriptor: String) -> Self {
        RunManifest {
            tool: "corrobem",
            version: env!("CARGO_PKG_VERSION"),
            command,
            spec,
            descriptor,
            parameters: serde_json::Value::Null,
            artifacts: Vec::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, AppError> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text.as_bytes())
            .map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `bytes` under `dir` and records its hash in one step.
pub fn write_artifact(dir: &Path, name: &str, bytes: &[u8]) -> Result<ArtifactRecord, AppError> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
    Ok(ArtifactRecord { path: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() })
}

pub fn create_out_dir(dir: &Path) -> Result<(), AppError> {
    std::fs::create_dir_all(dir).map_err(|e| AppError::Io(format!("{}: {e}", dir.display())))
}

/// Wall-clock laps between pipeline stages.
pub struct Stopwatch {
    last: Instant,
    pub timings: BTreeMap<String, f64>,
}

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch { last: Instant::now(), timings: BTreeMap::new() }
    }

    pub fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        let ms = now.duration_since(self.last).as_secs_f64() * 1e3;
        self.timings.insert(stage.to_string(), ms);
        self.last = now;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_empty_input_is_the_known_constant() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn artifact_roundtrip_records_size_and_hash() {
        let dir = std::env::temp_dir().join(format!("corrobem-manifest-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let rec = write_artifact(&dir, "x.csv", b"a,b\n1,2\n").unwrap();
        assert_eq!(rec.bytes, 8);
        assert_eq!(rec.sha256.len(), 64);
        let back = std::fs::read(dir.join("x.csv")).unwrap();
        assert_eq!(sha256_hex(&back), rec.sha256);
        std::fs::remove_dir_all(&dir).ok();
    }
}
