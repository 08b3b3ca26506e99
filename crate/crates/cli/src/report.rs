//! `report.txt`: deterministic results first, wall-clock timings last.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct Report {
    command: String,
    verdict: String,
    results: String,
    config_toml: String,
    timings: Vec<(String, Duration)>,
}

impl Report {
    pub fn new(command: &str, config_toml: String) -> Self {
        Self { command: command.into(), config_toml, ..Self::default() }
    }

    pub fn verdict(&mut self, v: impl Into<String>) {
        self.verdict = v.into();
    }

    pub fn line(&mut self, text: impl AsRef<str>) {
        self.results.push_str(text.as_ref());
        self.results.push('\n');
    }

    pub fn timing(&mut self, phase: impl Into<String>, d: Duration) {
        self.timings.push((phase.into(), d));
    }

    /// Hex SHA-256 of the effective configuration.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.config_toml.as_bytes()))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "dampcert {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "command: {}", self.command);
        let _ = writeln!(out, "config sha256: {}", self.digest());
        let _ = writeln!(out, "verdict: {}", self.verdict);
        out.push_str("\n[results]\n");
        out.push_str(&self.results);
        out.push_str("\n[effective configuration]\n");
        out.push_str(&self.config_toml);
        out.push_str("\n[timing]\n");
        for (phase, d) in &self.timings {
            let _ = writeln!(out, "{phase}\t{:.6} s", d.as_secs_f64());
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        write_file(&dir.join("report.txt"), &self.render())
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}
