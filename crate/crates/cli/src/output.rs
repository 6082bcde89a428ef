//! Result files. Every file starts with the same provenance record: tool version,
//! SHA-256 of the resolved configuration, master seed and the seed-derivation rule.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::CliError;

pub const SEED_SCHEME: &str = "splitmix64 path derivation: derive(seed, [labels...]) folds mix64 over the label path; \
every stream is ChaCha8 seeded from derive(master_seed, path)";

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub seed_scheme: &'static str,
}

impl Provenance {
    pub fn new(command: &str, config: &Config) -> Self {
        let canonical = serde_json::to_string(config).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        Self {
            tool: "pedcoal",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            seed: config.seed,
            seed_scheme: SEED_SCHEME,
        }
    }
}

/// Collects the files of one run and writes the metadata record at the end.
pub struct RunOutput {
    dir: PathBuf,
    provenance: Provenance,
    files: Vec<String>,
}

impl RunOutput {
    pub fn new(dir: &Path, provenance: Provenance) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), provenance, files: Vec::new() })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    /// JSON lines; the first line is `{"provenance": ...}`.
    pub fn json_lines<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<(), CliError> {
        let mut w = self.create(name)?;
        serde_json::to_writer(&mut w, &serde_json::json!({ "provenance": &self.provenance }))?;
        writeln!(w)?;
        for row in rows {
            serde_json::to_writer(&mut w, &row)?;
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    /// CSV with a `# provenance: {...}` comment line before the header.
    pub fn csv<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<(), CliError> {
        let mut w = self.create(name)?;
        writeln!(w, "# provenance: {}", serde_json::to_string(&self.provenance)?)?;
        let mut writer = csv::Writer::from_writer(w);
        for row in rows {
            writer.serialize(row)?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Writes `<command>.metadata.json` and returns its path.
    pub fn finish(mut self, config: &Config, summary: serde_json::Value) -> Result<PathBuf, CliError> {
        let name = format!("{}.metadata.json", self.provenance.command);
        let files = std::mem::take(&mut self.files);
        let record = serde_json::json!({
            "provenance": &self.provenance,
            "config": config,
            "files": files,
            "summary": summary,
        });
        let path = self.dir.join(&name);
        fs::write(&path, serde_json::to_string_pretty(&record)? + "\n")?;
        Ok(path)
    }
}
