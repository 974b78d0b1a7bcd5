//! Atomic output files and the run manifest that ties them to a configuration hash.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use spinlabel::config::RunConfig;

use crate::error::CliError;

/// sha256 over the canonical JSON form of the effective configuration. Field order follows
/// the schema, so equal configurations hash equally regardless of how the file was written.
pub fn config_hash(cfg: &RunConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("configuration is serializable");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Writes through a temporary file in the target directory and renames it into place, so a
/// reader never sees a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub tool_version: String,
    pub seeds: Vec<u64>,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
}

/// Collects the files of one command and writes them, the effective configuration and the
/// manifest into the output directory.
pub struct Run {
    pub out: PathBuf,
    pub command: &'static str,
    pub hash: String,
    started: String,
    outputs: Vec<String>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl Run {
    pub fn start(out: &Path, command: &'static str, cfg: &RunConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        let mut run =
            Self { out: out.to_path_buf(), command, hash: config_hash(cfg), started: now(), outputs: Vec::new() };
        let header = format!("# config_hash: {}\n", run.hash);
        run.write(&format!("{command}-config.toml"), &format!("{header}{}", cfg.to_toml()))?;
        Ok(run)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        write_atomic(&self.out.join(name), contents.as_bytes())?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn finish(self, seeds: Vec<u64>) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            config_hash: self.hash,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seeds,
            started: self.started,
            finished: now(),
            outputs: self.outputs,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest is serializable");
        write_atomic(&self.out.join(format!("{}-manifest.json", self.command)), text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_formatting_but_not_values() {
        let a = spinlabel::config::preset("fig3a").unwrap();
        let b = RunConfig::from_toml(&a.to_toml()).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        let mut c = a.clone();
        c.seed += 1;
        assert_ne!(config_hash(&a), config_hash(&c));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn atomic_write_replaces_existing_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
