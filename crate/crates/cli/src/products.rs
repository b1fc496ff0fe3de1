//! Deterministic output products: CSV assembly, content hashing, and the
//! run manifest that lists every file written with its sha256.

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Shortest round-trip decimal form; identical runs produce identical text.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Assemble a CSV product in memory (products are written whole, never
/// streamed, so a failing run leaves no truncated file behind).
pub fn csv_bytes<I>(header: &[&str], rows: I) -> anyhow::Result<Vec<u8>>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(w.into_inner()?)
}

pub fn json_bytes<T: Serialize>(value: &T) -> anyhow::Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[derive(Debug, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct ScenarioRef {
    pub path: String,
    pub sha256: String,
}

/// Provenance for one run; everything except `outputs` is known up front.
#[derive(Debug, Serialize)]
pub struct RunInfo {
    pub command: &'static str,
    pub scenario: Option<ScenarioRef>,
    /// Hash of the effective configuration (command + scenario after any
    /// seed override); equal hashes mean byte-identical products.
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub threads: usize,
}

#[derive(Debug, Serialize)]
struct Manifest {
    schema: u32,
    #[serde(flatten)]
    info: RunInfo,
    outputs: Vec<OutputRecord>,
}

/// Output directory. Nothing touches the filesystem until the first
/// `write`, so scenario/schema failures leave no partial output behind.
pub struct OutDir {
    dir: PathBuf,
    outputs: Vec<OutputRecord>,
}

impl OutDir {
    pub fn new(dir: &Path) -> Self {
        OutDir {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        fs::create_dir_all(&self.dir)
            .with_context(|| format!("creating {}", self.dir.display()))?;
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(OutputRecord {
            file: name.to_string(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Write `manifest.json` listing every product written so far. The
    /// manifest cannot contain its own hash, so it lists everything else.
    pub fn finish(self, info: RunInfo) -> anyhow::Result<()> {
        let manifest = Manifest {
            schema: helios_core::scenario::SCHEMA_VERSION,
            info,
            outputs: self.outputs,
        };
        let bytes = json_bytes(&manifest)?;
        fs::create_dir_all(&self.dir)
            .with_context(|| format!("creating {}", self.dir.display()))?;
        let path = self.dir.join("manifest.json");
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}
