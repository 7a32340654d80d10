//! Run manifests: what was run, on which inputs, producing which outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub config_sha256: Option<String>,
    /// Hash over everything in the manifest except the timestamp.
    pub run_sha256: String,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub timestamp_unix: u64,
    #[serde(default)]
    pub inputs: Vec<FileHash>,
    #[serde(default)]
    pub outputs: Vec<FileHash>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn hash_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.parse().ok()) {
        return t;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Collects the files of one run; `finish` hashes them and writes the manifest.
#[derive(Debug, Default)]
pub struct ManifestBuilder {
    command: String,
    seed: Option<u64>,
    config: Option<PathBuf>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            ..Self::default()
        }
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.seed = Some(seed);
        self
    }

    pub fn config(&mut self, path: &Path) -> &mut Self {
        self.config = Some(path.to_path_buf());
        self
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    pub fn build(&self) -> CliResult<RunManifest> {
        let hashes = |paths: &[PathBuf]| -> CliResult<Vec<FileHash>> {
            paths
                .iter()
                .map(|p| Ok(FileHash { name: file_name(p), sha256: hash_file(p)? }))
                .collect()
        };
        let config_sha256 = self.config.as_deref().map(hash_file).transpose()?;
        let inputs = hashes(&self.inputs)?;
        let outputs = hashes(&self.outputs)?;
        let mut m = RunManifest {
            command: self.command.clone(),
            tool_version: TOOL_VERSION.to_string(),
            seed: self.seed,
            config_sha256,
            run_sha256: String::new(),
            timestamp_unix: 0,
            inputs,
            outputs,
        };
        m.run_sha256 = m.content_hash();
        m.timestamp_unix = timestamp();
        Ok(m)
    }

    /// Writes `manifest_<command>.toml` into `out_dir` and returns its path.
    pub fn finish(&self, out_dir: &Path) -> CliResult<(PathBuf, RunManifest)> {
        let m = self.build()?;
        let path = out_dir.join(format!("manifest_{}.toml", self.command.replace(' ', "_")));
        let text = toml::to_string(&m).map_err(|e| CliError::parse(&path, e.to_string()))?;
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok((path, m))
    }
}

impl RunManifest {
    /// Hash of the run identity: command, version, seed, config and all
    /// file hashes.
    pub fn content_hash(&self) -> String {
        let mut s = format!("{}\n{}\n{:?}\n{:?}\n", self.command, self.tool_version, self.seed, self.config_sha256);
        for (tag, list) in [("in", &self.inputs), ("out", &self.outputs)] {
            for f in list {
                s.push_str(&format!("{tag} {} {}\n", f.name, f.sha256));
            }
        }
        sha256_hex(s.as_bytes())
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::parse(path, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn run_hash_ignores_timestamp_and_tracks_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("a.csv");
        fs::write(&out, "x\n1\n").unwrap();
        let mut b = ManifestBuilder::new("test");
        b.seed(3).output(&out);
        let (path, m1) = b.finish(dir.path()).unwrap();
        let mut m2 = m1.clone();
        m2.timestamp_unix += 100;
        assert_eq!(m2.content_hash(), m1.run_sha256);
        assert_eq!(RunManifest::read(&path).unwrap(), m1);
        fs::write(&out, "x\n2\n").unwrap();
        assert_ne!(b.build().unwrap().run_sha256, m1.run_sha256);
    }
}
