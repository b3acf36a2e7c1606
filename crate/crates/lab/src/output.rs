//! Artifact bundle and manifest. Recipes only add files to a [`Bundle`];
//! the runner writes everything at the end, manifest last.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::plot::LineChart;
use crate::table::Table;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Default)]
pub struct Bundle {
    files: BTreeMap<String, Vec<u8>>,
}

impl Bundle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn csv(&mut self, name: &str, table: &Table) {
        self.insert(name, table.to_csv().into_bytes());
    }

    pub fn svg(&mut self, name: &str, chart: &LineChart) {
        self.insert(name, chart.to_svg().into_bytes());
    }

    pub fn text(&mut self, name: &str, body: String) {
        self.insert(name, body.into_bytes());
    }

    fn insert(&mut self, name: &str, bytes: Vec<u8>) {
        assert!(name != MANIFEST_FILE && !name.contains('/'), "invalid artifact name {name}");
        let previous = self.files.insert(name.to_string(), bytes);
        assert!(previous.is_none(), "artifact {name} written twice");
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(Vec::as_slice)
    }

    /// Writes every file into `dir` and returns their records.
    pub fn write(&self, dir: &Path) -> io::Result<Vec<OutputRecord>> {
        fs::create_dir_all(dir)?;
        let mut records = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            fs::write(dir.join(name), bytes)?;
            let digest = Sha256::digest(bytes);
            records.push(OutputRecord {
                file: name.clone(),
                bytes: bytes.len() as u64,
                sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            });
        }
        Ok(records)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub purpose: String,
    pub seed: u64,
}

/// `manifest.json`. Everything except `wall_time_seconds` and `created_unix`
/// is a function of the config and the code version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub recipe: String,
    pub code_version: String,
    pub config: serde_json::Value,
    pub seeds: Vec<SeedRecord>,
    pub cache: serde_json::Value,
    pub outputs: Vec<OutputRecord>,
    pub summary: serde_json::Value,
    pub warnings: Vec<String>,
    pub wall_time_seconds: f64,
    pub created_unix: u64,
}

impl Manifest {
    pub fn read(dir: &Path) -> io::Result<Self> {
        serde_json::from_slice(&fs::read(dir.join(MANIFEST_FILE))?).map_err(io::Error::other)
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        let mut body = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        body.push('\n');
        fs::write(dir.join(MANIFEST_FILE), body)
    }

    /// Cache statuses in request order, e.g. `["miss", "hit"]`.
    pub fn cache_statuses(&self) -> Vec<String> {
        self.cache
            .as_array()
            .map(|a| a.iter().filter_map(|e| e["status"].as_str().map(str::to_string)).collect())
            .unwrap_or_default()
    }
}
