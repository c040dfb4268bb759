//! Run manifests: one `run.json` per output directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

pub const MANIFEST_FILE: &str = "run.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<InputRecord>,
    pub seeds: BTreeMap<String, u64>,
    pub started_at: String,
    pub finished_at: String,
    /// Paths relative to the output directory.
    pub outputs: Vec<String>,
}

/// Collects a manifest while a command runs.
pub struct Recorder {
    manifest: RunManifest,
}

impl Recorder {
    pub fn start(command: &str, config: &impl Serialize) -> anyhow::Result<Self> {
        Ok(Self {
            manifest: RunManifest {
                tool: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                command: command.to_string(),
                config: serde_json::to_value(config)?,
                inputs: Vec::new(),
                seeds: BTreeMap::new(),
                started_at: now()?,
                finished_at: String::new(),
                outputs: Vec::new(),
            },
        })
    }

    pub fn input(&mut self, path: &Path) -> anyhow::Result<()> {
        let bytes = fs::read(path).with_context(|| format!("reading input {}", path.display()))?;
        self.manifest.inputs.push(InputRecord {
            path: path.display().to_string(),
            sha256: hex(&Sha256::digest(&bytes)),
        });
        Ok(())
    }

    /// Every regular file of `dir` except hidden files and its run manifest.
    pub fn input_dir(&mut self, dir: &Path) -> anyhow::Result<()> {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .with_context(|| format!("reading directory {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .filter(|p| {
                let name = p.file_name().unwrap_or_default().to_string_lossy();
                !name.starts_with('.') && name != MANIFEST_FILE
            })
            .collect();
        files.sort();
        files.iter().try_for_each(|f| self.input(f))
    }

    /// The graph manifest and every file it references.
    pub fn input_graph(&mut self, manifest: &Path) -> anyhow::Result<()> {
        self.input(manifest)?;
        let text = fs::read_to_string(manifest)?;
        let m: medusa_core::io::GraphManifest = serde_json::from_str(&text)
            .with_context(|| format!("malformed graph manifest {}", manifest.display()))?;
        let base = manifest.parent().unwrap_or(Path::new(""));
        let files = m
            .types
            .iter()
            .map(|t| &t.labels_file)
            .chain(m.relations.iter().map(|r| &r.matrix_file))
            .chain(m.constraints.iter().map(|c| &c.matrix_file));
        for f in files {
            self.input(&base.join(f))?;
        }
        Ok(())
    }

    pub fn seed(&mut self, name: &str, seed: u64) {
        self.manifest.seeds.insert(name.to_string(), seed);
    }

    pub fn output(&mut self, rel: &str) {
        self.manifest.outputs.push(rel.to_string());
    }

    pub fn finish(mut self, out_dir: &Path) -> anyhow::Result<RunManifest> {
        self.manifest.finished_at = now()?;
        self.manifest.outputs.sort();
        medusa_core::io::write_json(out_dir.join(MANIFEST_FILE), &self.manifest)?;
        Ok(self.manifest)
    }
}

/// Seed given on the command line, or a fresh one.
pub fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u32>() as u64;
        tracing::info!(seed = s, "no seed given; drew one");
        s
    })
}

/// RFC 3339 time, pinned by SOURCE_DATE_EPOCH when set.
fn now() -> anyhow::Result<String> {
    let secs = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => v
            .trim()
            .parse::<i64>()
            .with_context(|| format!("SOURCE_DATE_EPOCH=`{v}` is not an integer"))?,
        Err(_) => SystemTime::now().duration_since(UNIX_EPOCH)?.as_secs() as i64,
    };
    Ok(OffsetDateTime::from_unix_timestamp(secs)?.format(&Rfc3339)?)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
