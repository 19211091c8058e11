//! File emission: CSV for grids and series, JSON for metadata.
//!
//! CSV files are UTF-8 and comma-separated. `#` lines carrying run metadata
//! may precede the header row, whose entries are `name [unit]`. Floats use
//! the shortest decimal that round-trips, so outputs are byte-stable.
//!
//! Every file is written to a temporary sibling and renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::config::RunConfig;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e.error })?;
    Ok(())
}

/// A table with a header row.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Csv {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), ..Self::default() }
    }

    pub fn comment(&mut self, line: impl Into<String>) -> &mut Self {
        self.comments.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        self.push_cells(row.iter().map(|x| x.to_string()).collect());
    }

    /// A row with text cells; they must not contain commas or newlines.
    pub fn push_cells(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Outcome of one internal check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, detail: detail.into() }
    }
}

/// Metadata written next to every command's data files.
#[derive(Debug, Serialize)]
pub struct Metadata<'a, R: Serialize> {
    pub version: &'static str,
    pub command: String,
    pub config: &'a RunConfig,
    pub assertions: &'a [Assertion],
    pub files: Vec<String>,
    pub results: R,
}

/// Collects a command's files and assertions and writes them out.
#[derive(Debug)]
pub struct Emitter {
    dir: PathBuf,
    files: Vec<String>,
    pub assertions: Vec<Assertion>,
}

impl Emitter {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), files: Vec::new(), assertions: Vec::new() }
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        let a = Assertion::new(name, pass, detail);
        if a.pass {
            log::info!("check {}: pass ({})", a.name, a.detail);
        } else {
            log::warn!("check {}: FAIL ({})", a.name, a.detail);
        }
        self.assertions.push(a);
    }

    pub fn csv(&mut self, name: &str, table: &Csv) -> Result<(), CliError> {
        let path = self.dir.join(name);
        write_atomic(&path, table.render().as_bytes())?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes `<command>.json` and returns the command summary.
    pub fn finish<R: Serialize>(mut self, config: &RunConfig, results: R) -> Result<Summary, CliError> {
        let name = format!("{}.json", config.kind);
        self.files.push(name.clone());
        let meta = Metadata {
            version: VERSION,
            command: config.kind.to_string(),
            config,
            assertions: &self.assertions,
            files: self.files.clone(),
            results,
        };
        let mut text = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Runtime(e.to_string()))?;
        text.push('\n');
        write_atomic(&self.dir.join(&name), text.as_bytes())?;
        Ok(Summary { files: self.files, assertions: self.assertions })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub files: Vec<String>,
    pub assertions: Vec<Assertion>,
}

impl Summary {
    pub fn all_pass(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Csv::new(&["t [s]", "xi [1]"]);
        t.comment("version 0.1.0");
        t.push(vec![0.0, 0.1]);
        t.push(vec![1e-7, 1.0 / 3.0]);
        assert_eq!(t.render(), "# version 0.1.0\nt [s],xi [1]\n0,0.1\n0.0000001,0.3333333333333333\n");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested/x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
