//! Run directories: CSV tables, the resolved scenario and the manifest.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use fdamimo::scenario::Scenario;
use fdamimo::{Error, Result};
use serde::Serialize;
use sha1::{Digest, Sha1};

/// Writes files into one run directory and remembers what it wrote.
pub struct RunDir {
    root: PathBuf,
    files: Vec<String>,
    started: String,
}

fn io(e: impl std::fmt::Display) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
            started: now(),
        })
    }

    fn path(&mut self, name: &str) -> Result<PathBuf> {
        let p = self.root.join(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        self.files.push(name.to_string());
        Ok(p)
    }

    /// CSV with a header row; every cell is preformatted text.
    pub fn csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<()> {
        let path = self.path(name)?;
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(&row).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.path(name)?;
        fs::write(path, body)?;
        Ok(())
    }

    pub fn binary(
        &mut self,
        name: &str,
        write: impl FnOnce(&mut std::io::BufWriter<fs::File>) -> Result<()>,
    ) -> Result<()> {
        let path = self.path(name)?;
        let mut w = std::io::BufWriter::new(fs::File::create(path)?);
        write(&mut w)?;
        Ok(())
    }

    /// Writes the resolved scenario and the manifest; call last.
    pub fn finish(
        mut self,
        command: &str,
        source: &str,
        original_text: &str,
        sc: &Scenario,
    ) -> Result<()> {
        self.text("scenario.toml", &sc.to_toml_string()?)?;
        let manifest = Manifest {
            command: command.to_string(),
            scenario_source: source.to_string(),
            scenario_hash: git_blob_hash(original_text.as_bytes()),
            seed: sc.scene.seed,
            started_utc: self.started.clone(),
            finished_utc: now(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            files: self.files.clone(),
        };
        let body = toml::to_string(&manifest).map_err(io)?;
        fs::write(self.root.join("manifest.toml"), body)?;
        Ok(())
    }
}

#[derive(Serialize)]
struct Manifest {
    command: String,
    scenario_source: String,
    /// SHA-1 of the scenario text as git would store it.
    scenario_hash: String,
    seed: u64,
    started_utc: String,
    finished_utc: String,
    version: String,
    files: Vec<String>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// `sha1("blob <len>\0" ‖ content)`, the id `git hash-object` prints.
pub fn git_blob_hash(content: &[u8]) -> String {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    hex::encode(h.finalize())
}

pub fn f(x: f64) -> String {
    format!("{x:.6}")
}

pub fn db(x: f64) -> String {
    format!("{:.4}", 10.0 * x.max(f64::MIN_POSITIVE).log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_hash_matches_git() {
        // `printf 'hello\n' | git hash-object --stdin`
        assert_eq!(
            git_blob_hash(b"hello\n"),
            "ce013625030ba8dba906f756967f9e9ca394464a"
        );
        assert_eq!(
            git_blob_hash(b""),
            "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"
        );
    }
}
