//! Deterministic file emission: CSV curves, a JSON scalar summary and a
//! plain-text manifest with content digests.
//!
//! CSV cells print `f64` with Rust's shortest round-trip formatting; the
//! infinite-temperature sentinel appears as `inf`. The manifest is the only
//! file carrying a timestamp, so CSV/JSON stay bit-identical across runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use spinotto::states::ThermalStatus;
use spinotto::trajectory::CycleSample;

use crate::CliError;

/// One run's output directory plus the list of files written into it.
pub struct RunOutput {
    dir: PathBuf,
    files: Vec<String>,
}

/// A CSV cell.
#[derive(Clone, Debug)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // Shortest round-trip formatting keeps full double precision.
            Cell::Float(v) => format!("{v}"),
            Cell::Int(v) => format!("{v}"),
            Cell::Text(s) => {
                if s.contains(',') || s.contains('"') || s.contains('\n') {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
        }
    }
}

impl RunOutput {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Validation(format!("cannot create output dir {dir:?}: {e}")))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write_csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[Vec<Cell>],
    ) -> Result<(), CliError> {
        let mut text = String::new();
        text.push_str(&header.join(","));
        text.push('\n');
        for row in rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            text.push_str(&line.join(","));
            text.push('\n');
        }
        self.write_file(name, text.as_bytes())
    }

    pub fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Validation(format!("summary serialization: {e}")))?;
        text.push('\n');
        self.write_file(name, text.as_bytes())
    }

    pub fn write_file(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::Validation(format!("cannot create {parent:?}: {e}")))?;
        }
        fs::write(&path, bytes)
            .map_err(|e| CliError::Validation(format!("cannot write {path:?}: {e}")))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Write the manifest listing every file under the output directory
    /// (recursively) with its SHA-256. Walking the tree rather than the
    /// write log makes the completeness guarantee structural.
    pub fn finalize_manifest(
        self,
        command: &str,
        preset: &str,
        params: &BTreeMap<String, String>,
    ) -> Result<PathBuf, CliError> {
        let mut text = String::new();
        let _ = writeln!(text, "# spinotto result manifest");
        let _ = writeln!(text, "version: {}", env!("CARGO_PKG_VERSION"));
        let created = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let _ = writeln!(text, "created_unix: {created}");
        let _ = writeln!(text, "command: {command}");
        let _ = writeln!(text, "preset: {preset}");
        let _ = writeln!(text, "params:");
        for (k, v) in params {
            let _ = writeln!(text, "  {k}: {v}");
        }
        let _ = writeln!(text, "files:");
        let mut names = Vec::new();
        collect_files(&self.dir, &self.dir, &mut names)?;
        names.retain(|n| n != "manifest.txt");
        names.sort();
        for name in &names {
            let bytes = fs::read(self.dir.join(name))
                .map_err(|e| CliError::Validation(format!("cannot hash {name}: {e}")))?;
            let mut hasher = Sha256::new();
            hasher.update(&bytes);
            let digest = hasher.finalize();
            let mut hexed = String::with_capacity(64);
            for b in digest {
                let _ = write!(hexed, "{b:02x}");
            }
            let _ = writeln!(text, "  {hexed}  {name}");
        }
        let path = self.dir.join("manifest.txt");
        fs::write(&path, text.as_bytes())
            .map_err(|e| CliError::Validation(format!("cannot write manifest: {e}")))?;
        Ok(path)
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<(), CliError> {
    let entries = fs::read_dir(dir)
        .map_err(|e| CliError::Validation(format!("cannot list {dir:?}: {e}")))?;
    for entry in entries {
        let entry = entry.map_err(|e| CliError::Validation(format!("listing error: {e}")))?;
        let path = entry.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else if let Ok(rel) = path.strip_prefix(root) {
            out.push(rel.to_string_lossy().replace('\\', "/"));
        }
    }
    Ok(())
}

/// Reference-temperature cell with the sentinel statuses mapped to `inf`/`0`.
pub fn t_star_cell(status: ThermalStatus, t_star: f64) -> Cell {
    match status {
        ThermalStatus::Finite => Cell::Float(t_star),
        ThermalStatus::InfiniteTemperature => Cell::Float(f64::INFINITY),
        ThermalStatus::ZeroTemperature => Cell::Float(0.0),
    }
}

/// Rows for a cycle trajectory: `stroke_id,t,mean_energy,t_star,entropy`.
pub fn trajectory_rows(samples: &[CycleSample]) -> Vec<Vec<Cell>> {
    samples
        .iter()
        .map(|cs| {
            vec![
                Cell::Text(cs.stroke.label().into()),
                Cell::Float(cs.sample.t),
                Cell::Float(cs.sample.energy),
                t_star_cell(cs.sample.t_star.status, cs.sample.t_star.t_star),
                Cell::Float(cs.sample.entropy),
            ]
        })
        .collect()
}

pub const TRAJECTORY_HEADER: [&str; 5] = ["stroke_id", "t", "mean_energy", "t_star", "entropy"];
