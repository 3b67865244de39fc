//! Artifact writing: atomic files, CSV tables, and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const MANIFEST_SCHEMA: u32 = 1;

/// One written file as recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
    /// CSV schema version, or `None` for plots.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schema: Option<u32>,
}

pub struct OutputDir {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Writes via a temporary file in the same directory and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(&tmp, e))?;
    f.sync_all().map_err(|e| CliError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn artifacts(&self) -> &[Artifact] {
        &self.artifacts
    }

    fn record(&mut self, name: &str, bytes: &[u8], schema: Option<u32>) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.artifacts.push(Artifact {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
            schema,
        });
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    /// CSV with `header` and pre-formatted rows.
    pub fn write_csv<R, I>(&mut self, name: &str, schema: u32, header: &[&str], rows: I) -> Result<PathBuf, CliError>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::Computation(format!("csv encoding for {name}: {e}"));
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(row).map_err(csv_err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Computation(format!("csv encoding for {name}: {e}")))?;
        self.record(name, &bytes, Some(schema))
    }

    pub fn write_svg(&mut self, name: &str, svg: &str) -> Result<PathBuf, CliError> {
        self.record(name, svg.as_bytes(), None)
    }

    /// Writes `manifest.json` listing every artifact written so far.
    pub fn finish(self, manifest: Manifest) -> Result<PathBuf, CliError> {
        let manifest = Manifest {
            artifacts: self.artifacts,
            ..manifest
        };
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Computation(format!("manifest encoding: {e}")))?;
        text.push('\n');
        let path = self.dir.join(MANIFEST_NAME);
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UnitConversion {
    pub input: &'static str,
    pub canonical: &'static str,
    pub factor: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub manifest_schema: u32,
    pub config_schema: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: &'static str,
    pub seed: u64,
    pub units: UnitConversion,
    pub config: serde_json::Value,
    pub results: serde_json::Value,
    pub artifacts: Vec<Artifact>,
}

/// Shortest round-trip decimal form, so equal floats print identically.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn csv_and_manifest_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(tmp.path()).unwrap();
        out.write_csv("a.csv", 1, &["x", "y"], vec![vec![num(1.5), num(-2.0)]]).unwrap();
        let text = fs::read_to_string(tmp.path().join("a.csv")).unwrap();
        assert_eq!(text, "x,y\n1.5,-2\n");
        let manifest = Manifest {
            manifest_schema: MANIFEST_SCHEMA,
            config_schema: 1,
            tool: "tfe",
            version: "0",
            experiment: "test",
            seed: 0,
            units: UnitConversion {
                input: "rad/ps",
                canonical: "rad/ps",
                factor: 1.0,
            },
            config: serde_json::Value::Null,
            results: serde_json::Value::Null,
            artifacts: Vec::new(),
        };
        let path = out.finish(manifest).unwrap();
        let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(m["artifacts"][0]["sha256"], sha256_hex(text.as_bytes()));
        assert!(!tmp.path().join(".a.csv.tmp").exists());
    }
}
