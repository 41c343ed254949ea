//! Writers for the output directory. Data files depend only on the config
//! and seed; run metadata goes to a separate manifest.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    x.to_string()
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub struct OutputDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn io_err(&self, name: &str) -> impl Fn(std::io::Error) -> CliError {
        let path = self.path(name);
        move |source| CliError::Io {
            path: path.clone(),
            source,
        }
    }

    pub fn csv<I, R>(&mut self, name: &str, header: &[String], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let err = self.io_err(name);
        let mut w = csv::Writer::from_path(self.path(name)).map_err(|e| err(e.into()))?;
        w.write_record(header).map_err(|e| err(e.into()))?;
        for row in rows {
            w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(|e| err(e.into()))?;
        }
        w.flush().map_err(&err)?;
        self.written.push(name.to_owned());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Config(format!("cannot serialize {name}: {e}")))?;
        text.push('\n');
        self.text(name, &text)
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        std::fs::write(self.path(name), body).map_err(self.io_err(name))?;
        self.written.push(name.to_owned());
        Ok(())
    }
}

/// Everything needed to replay a run.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_sha256: String,
    pub seed: u64,
    pub created_unix: u64,
    pub files: &'a [String],
}

impl<'a> Manifest<'a> {
    pub fn new(command: &'a str, config_bytes: &[u8], seed: u64, files: &'a [String]) -> Self {
        let digest = Sha256::digest(config_bytes);
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            seed,
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            files,
        }
    }
}
