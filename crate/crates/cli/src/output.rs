//! Deterministic output writing with cleanup of partial results.
//!
//! Files are written to a temporary sibling and renamed into place; if the
//! command fails midway, everything it already wrote is removed.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

#[derive(Debug, Default)]
pub struct OutputWriter {
    written: Vec<PathBuf>,
}

impl OutputWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, path)
            .with_context(|| format!("finalizing {}", path.display()))?;
        self.written.push(path.to_path_buf());
        Ok(())
    }

    /// Removes every file written so far. Called on command failure.
    pub fn remove_written(&mut self) {
        for path in self.written.drain(..) {
            let _ = fs::remove_file(path);
        }
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

/// Renders one CSV row; fields never contain commas or quotes in our formats.
pub fn csv_row<S: AsRef<str>>(fields: impl IntoIterator<Item = S>) -> String {
    let mut row = fields
        .into_iter()
        .map(|f| f.as_ref().to_string())
        .collect::<Vec<_>>()
        .join(",");
    row.push('\n');
    row
}

/// f64 rendering used in all emitted files: shortest round-trip form, so
/// reruns are byte-identical and parsing restores the exact value.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}
