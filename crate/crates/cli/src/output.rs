//! Output directories with manifests, and number formatting.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mqhawkes::manifest::Manifest;
use serde::Serialize;

/// Float with 17 significant digits, `.` decimal separator.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Aligned `key value` line for text output, newline included.
pub fn line(key: &str, value: impl std::fmt::Display) -> String {
    format!("{key:<14}{value}\n")
}

pub fn json(value: &impl Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Writes to standard output; a closed pipe is not an error.
pub fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

/// Output directory of one run; every file written through it is digested into the
/// manifest.
pub struct Outputs {
    dir: PathBuf,
    manifest: Manifest,
}

impl Outputs {
    pub fn create(dir: &Path, command: &str, config: &impl Serialize, seed: Option<u64>) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), manifest: Manifest::new(command, config, seed)? })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        Ok(self.manifest.add_input(path)?)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.record(name)
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        self.write(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    /// Records a file already written under the output directory.
    pub fn record(&mut self, name: &str) -> Result<()> {
        Ok(self.manifest.add_output(&self.dir, name)?)
    }

    pub fn finish(self) -> Result<PathBuf> {
        Ok(self.manifest.write(&self.dir)?)
    }
}
