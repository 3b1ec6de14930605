//! Output directory handling and JSON/CSV emission. Floats are written in
//! shortest round-trip form.

use serde::Serialize;
use std::path::{Path, PathBuf};

use crate::config::{Format, RunConfig};
use crate::{CliError, OUT_DIR_ENV};

pub struct OutputDir {
    pub dir: PathBuf,
    json: bool,
    csv: bool,
}

impl OutputDir {
    /// Flag, then config, then `IONGATE_OUT_DIR`, then the working directory.
    pub fn resolve(flag: Option<PathBuf>, cfg: &RunConfig) -> Result<Self, CliError> {
        let dir = flag
            .or_else(|| cfg.output.directory.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir).map_err(CliError::io(format!("cannot create {}", dir.display())))?;
        Ok(OutputDir { dir, json: cfg.wants(Format::Json), csv: cfg.wants(Format::Csv) })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `value` as pretty JSON regardless of the configured formats.
    pub fn write_json_always<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(format!("serialising {name}: {e}")))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(CliError::io(format!("cannot write {}", path.display())))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        if self.json {
            self.write_json_always(name, value)?;
        }
        Ok(())
    }

    pub fn write_csv<R>(&self, name: &str, header: &[&str], rows: R) -> Result<(), CliError>
    where
        R: IntoIterator<Item = Vec<String>>,
    {
        if !self.csv {
            return Ok(());
        }
        let path = self.path(name);
        let csv_err = |e: csv::Error| CliError::Input(format!("writing {}: {e}", path.display()));
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(CliError::io(format!("cannot write {}", path.display())))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

/// `"0111"` to `[false, true, true, true]`.
pub fn parse_mask(s: &str) -> Result<Vec<bool>, CliError> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(CliError::Input(format!("mask must be a string of 0 and 1, got {s:?}"))),
        })
        .collect()
}
