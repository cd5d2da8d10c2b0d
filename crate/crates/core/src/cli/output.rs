//! Run directories: one manifest per directory plus the files it lists.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::Result;

/// Environment variable naming the parent of default run directories.
pub const OUT_ENV: &str = "NODAL_LAB_OUT";
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub version: String,
    pub base_seed: u64,
    pub config: Value,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    /// `running`, `complete` or `failed`.
    pub status: String,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub diagnostics: Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub struct RunDir {
    dir: PathBuf,
    manifest: RunManifest,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// `--out` if given, else `$NODAL_LAB_OUT/<experiment>-seed<seed>`, else `runs/...`.
pub fn resolve_dir(out: Option<&Path>, experiment: &str, seed: u64) -> PathBuf {
    match out {
        Some(p) => p.to_path_buf(),
        None => {
            let parent = std::env::var_os(OUT_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("runs"));
            parent.join(format!("{experiment}-seed{seed}"))
        }
    }
}

impl RunDir {
    /// Creates the directory and writes the manifest with status `running`.
    pub fn create(dir: PathBuf, experiment: &str, base_seed: u64, config: Value) -> Result<Self> {
        fs::create_dir_all(&dir)?;
        let run = RunDir {
            dir,
            manifest: RunManifest {
                experiment: experiment.to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                base_seed,
                config,
                started_unix: now(),
                finished_unix: None,
                status: "running".into(),
                outputs: Vec::new(),
                diagnostics: Map::new(),
                error: None,
            },
        };
        run.write_manifest()?;
        Ok(run)
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn diagnostic(&mut self, key: &str, value: impl Into<Value>) {
        self.manifest.diagnostics.insert(key.to_string(), value.into());
    }

    /// Writes `name` through `fill` and records it in the manifest.
    pub fn write_file<F>(&mut self, name: &str, fill: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        fill(&mut w)?;
        w.flush()?;
        if !self.manifest.outputs.iter().any(|o| o == name) {
            self.manifest.outputs.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write_file(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }

    pub fn finish(&mut self) -> Result<()> {
        self.manifest.status = "complete".into();
        self.manifest.finished_unix = Some(now());
        self.write_manifest()
    }

    pub fn fail(&mut self, message: &str) -> Result<()> {
        self.manifest.status = "failed".into();
        self.manifest.finished_unix = Some(now());
        self.manifest.error = Some(message.to_string());
        self.write_manifest()
    }

    fn write_manifest(&self) -> Result<()> {
        let mut w = BufWriter::new(File::create(self.dir.join(MANIFEST))?);
        serde_json::to_writer_pretty(&mut w, &self.manifest)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}
