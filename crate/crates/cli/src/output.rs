//! All-or-nothing output sets.

use std::fs;
use std::path::{Path, PathBuf};

use papc_core::io::write_atomic;

use crate::{CliError, EXIT_IO};

/// Files rendered in memory and written together by [`OutputSet::commit`].
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), bytes.into()));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Writes every file atomically into `dir`; on failure the files already
    /// written by this call are removed again.
    pub fn commit(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let io_err = |p: &Path, e: String| CliError {
            code: EXIT_IO,
            message: format!("{}: {e}", p.display()),
        };
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e.to_string()))?;
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            if let Err(e) = write_atomic(&path, bytes) {
                for p in &written {
                    let _ = fs::remove_file(p);
                }
                if created_dir {
                    let _ = fs::remove_dir(dir);
                }
                return Err(io_err(&path, e.to_string()));
            }
            written.push(path);
        }
        Ok(written)
    }
}

/// `key=value` lines in insertion order.
#[derive(Debug, Default, Clone)]
pub struct Summary {
    lines: Vec<(String, String)>,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.lines.push((key.to_string(), value.to_string()));
        self
    }

    pub fn opt(&mut self, key: &str, value: Option<f64>) -> &mut Self {
        match value {
            Some(v) => self.set(key, fmt_f64(v)),
            None => self.set(key, "absent"),
        }
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.set(key, fmt_f64(value))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.lines {
            s.push_str(k);
            s.push('=');
            s.push_str(v);
            s.push('\n');
        }
        s
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.10e}")
}

/// Parses rendered `key=value` text back into pairs.
pub fn parse_summary(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}
