//! Result tables and run manifests.
//!
//! Every command writes its artifacts through an [`OutputSink`], which
//! records each file's SHA-256 and byte count and finishes by writing a
//! manifest. Nothing in a manifest depends on wall-clock time or absolute
//! paths, so a fixed (config, seed) pair reproduces it byte for byte.

use std::path::{Path, PathBuf};

use liqrec::econ::RegressionResult;
use liqrec::error::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Shortest round-trip rendering; the same convention the panel CSVs use.
pub fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// A rectangular result table, serialized as CSV and JSON side by side.
#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in table {}", self.name);
        self.rows.push(row);
    }

    fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::data(format!("csv flush: {e}")))
    }

    fn to_json(&self) -> Result<Vec<u8>> {
        let mut out =
            serde_json::to_vec_pretty(self).map_err(|e| Error::data(format!("json: {e}")))?;
        out.push(b'\n');
        Ok(out)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::data(format!("csv write: {e}"))
}

/// One row per estimated coefficient: estimate, SE, t, p, and the 95% CI.
pub fn coefficient_table(name: &str, r: &RegressionResult) -> Table {
    let mut t = Table::new(name, &["term", "estimate", "se", "t", "p", "ci_lo", "ci_hi"]);
    for i in 0..r.coef.len() {
        let (lo, hi) = r.ci95(i);
        t.push(vec![
            r.names[i].clone(),
            fmt_num(r.coef[i]),
            fmt_num(r.se(i)),
            fmt_num(r.t_stat(i)),
            fmt_num(r.p_value(i)),
            fmt_num(lo),
            fmt_num(hi),
        ]);
    }
    for jt in &r.joint_tests {
        t.push(vec![
            format!("joint:{}", jt.name),
            fmt_num(jt.f_stat),
            String::new(),
            String::new(),
            fmt_num(jt.p_value),
            String::new(),
            String::new(),
        ]);
    }
    t
}

#[derive(Debug, Serialize)]
struct ManifestEntry {
    path: String,
    sha256: String,
    bytes: usize,
}

#[derive(Debug, Serialize)]
struct Manifest {
    command: String,
    seed: u64,
    config_sha256: String,
    outputs: Vec<ManifestEntry>,
}

/// Collects written artifacts and finishes with the command manifest.
pub struct OutputSink {
    dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl OutputSink {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| {
            Error::config(format!("cannot create output dir {}: {e}", dir.display()))
        })?;
        Ok(Self { dir: dir.to_path_buf(), entries: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Write bytes under the sink directory and record them.
    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)?;
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            sha256: hex_sha256(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    /// Record a file another writer produced inside the sink directory.
    pub fn record_existing(&mut self, name: &str) -> Result<()> {
        let bytes = std::fs::read(self.dir.join(name))?;
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            sha256: hex_sha256(&bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    /// Write a table as `<name>.csv` and `<name>.json`.
    pub fn write_table(&mut self, table: &Table) -> Result<()> {
        let csv = table.to_csv()?;
        self.write_bytes(&format!("{}.csv", table.name), &csv)?;
        let json = table.to_json()?;
        self.write_bytes(&format!("{}.json", table.name), &json)
    }

    /// Write `manifest_<command>.json` over everything recorded so far.
    pub fn finish(mut self, command: &str, seed: u64, config_toml: &str) -> Result<PathBuf> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            command: command.to_string(),
            seed,
            config_sha256: hex_sha256(config_toml.as_bytes()),
            outputs: self.entries,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)
            .map_err(|e| Error::data(format!("manifest json: {e}")))?;
        bytes.push(b'\n');
        let path = self.dir.join(format!("manifest_{command}.json"));
        std::fs::write(&path, &bytes)?;
        Ok(path)
    }
}

pub fn hex_sha256(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}
