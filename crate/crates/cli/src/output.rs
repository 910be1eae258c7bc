//! Artifact writing: CSV tables, JSON files and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;

/// Fixed 12-decimal rendering with trailing zeros trimmed.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

#[derive(Debug, Serialize)]
struct Artifact {
    file: String,
    sha256: String,
}

/// Collects the files of one run and writes them under the output directory.
pub struct RunOutput {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl RunOutput {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
        self.artifacts.push(Artifact {
            file: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        for row in rows {
            writer.write_record(&row)?;
        }
        let bytes = writer.into_inner().context("flushing CSV buffer")?;
        self.write(name, &bytes)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Writes `run_manifest.json` listing every artifact of the run.
    pub fn finish(self, subcommand: &str, config: &ScenarioConfig) -> Result<()> {
        let manifest = json!({
            "tool": "ftt",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": subcommand,
            "seed": config.seed(),
            "config_hash": config.hash(),
            "config": config,
            "outputs": self.artifacts,
        });
        let path = self.dir.join("run_manifest.json");
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))
    }
}
