use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn config_hash(config: &RunConfig) -> String {
    sha256_hex(serde_json::to_string(config).expect("config serializes").as_bytes())
}

#[derive(Debug, Serialize)]
struct Artifact {
    file: String,
    sha256: String,
    bytes: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    manifest_version: u32,
    bandlab_version: &'a str,
    config: &'a RunConfig,
    config_sha256: &'a str,
    artifacts: &'a [Artifact],
    threads: usize,
}

/// Output directory that records every artifact for the manifest.
pub struct Outputs {
    dir: PathBuf,
    config: RunConfig,
    hash: String,
    artifacts: Vec<Artifact>,
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

impl Outputs {
    pub fn new(dir: &Path, config: &RunConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            config: config.clone(),
            hash: config_hash(config),
            artifacts: Vec::new(),
        })
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    fn record(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.artifacts.push(Artifact { file: name.into(), sha256: sha256_hex(bytes), bytes: bytes.len() });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("result serializes");
        text.push('\n');
        self.record(name, text.as_bytes())
    }

    /// CSV with a `#` preamble carrying version, seed and config hash.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
        self.csv_with(name, &[], header, rows)
    }

    /// CSV with extra `# key=value` preamble lines after the standard ones.
    pub fn csv_with(
        &mut self,
        name: &str,
        meta: &[(&str, String)],
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<(), CliError> {
        let mut s = String::new();
        s.push_str(&format!("# bandlab {}\n", env!("CARGO_PKG_VERSION")));
        s.push_str(&format!("# command: {}\n", serde_json::to_string(&self.config.command).unwrap().trim_matches('"')));
        s.push_str(&format!("# seed: {}\n", self.config.seed));
        s.push_str(&format!("# config_sha256: {}\n", self.hash));
        for (k, v) in meta {
            s.push_str(&format!("#{k}={v}\n"));
        }
        s.push_str(&header.join(","));
        s.push('\n');
        for row in rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        self.record(name, s.as_bytes())
    }

    pub fn finish(self) -> Result<PathBuf, CliError> {
        let manifest = Manifest {
            manifest_version: MANIFEST_VERSION,
            bandlab_version: env!("CARGO_PKG_VERSION"),
            config: &self.config,
            config_sha256: &self.hash,
            artifacts: &self.artifacts,
            threads: bandlab::parallel::current_threads(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.dir.join("manifest.json");
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

/// Shortest round-trip representation, so reruns compare byte for byte.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}
