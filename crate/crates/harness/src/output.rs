//! CSV tables, in-memory artifacts and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{HarnessError, Result};

pub const MANIFEST_FORMAT: &str = "v0init-manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table built in memory so nothing touches disk until a run has finished.
pub struct CsvTable {
    writer: csv::Writer<Vec<u8>>,
    width: usize,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(header)
            .expect("writing to a Vec cannot fail");
        CsvTable {
            writer,
            width: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.width, "row width differs from header");
        self.writer
            .write_record(cells)
            .expect("writing to a Vec cannot fail");
    }

    pub fn into_artifact(self, name: &str) -> Artifact {
        let bytes = self
            .writer
            .into_inner()
            .expect("flushing a Vec cannot fail");
        Artifact {
            name: name.to_string(),
            bytes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn json(name: &str, value: &impl Serialize) -> Artifact {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serializable value");
        bytes.push(b'\n');
        Artifact {
            name: name.to_string(),
            bytes,
        }
    }
}

/// Everything a run produced, before it is written.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    /// Headline numbers echoed into the manifest.
    pub summary: Map<String, Value>,
    pub warnings: Vec<String>,
}

impl RunOutput {
    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }

    pub fn summary_f64(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(Value::as_f64)
    }

    pub(crate) fn put(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub format: &'static str,
    pub subcommand: &'a str,
    pub library: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config: &'a C,
    pub outputs: Vec<&'a str>,
    pub wall_time_secs: f64,
    pub summary: &'a Map<String, Value>,
    pub warnings: &'a [String],
}

/// Writes every artifact plus `manifest.json` into `dir`, creating it if needed.
pub fn write_run(
    dir: &Path,
    output: &RunOutput,
    manifest: &impl Serialize,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut written = Vec::with_capacity(output.artifacts.len() + 1);
    for artifact in &output.artifacts {
        let path = dir.join(&artifact.name);
        fs::write(&path, &artifact.bytes).map_err(|e| HarnessError::io(&path, e))?;
        written.push(path);
    }
    let path = dir.join(MANIFEST_FILE);
    let manifest = Artifact::json(MANIFEST_FILE, manifest);
    fs::write(&path, &manifest.bytes).map_err(|e| HarnessError::io(&path, e))?;
    written.push(path);
    Ok(written)
}
