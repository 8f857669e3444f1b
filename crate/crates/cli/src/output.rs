//! The run directory: manifest, snapshots, CSV tables and reports.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rashba_core::grid::snapshot::Snapshot;
use rashba_core::grid::{GridSpec, SpinDensityField};

use crate::scenario::Scenario;

pub const MANIFEST: &str = "manifest.toml";

pub struct Output {
    dir: PathBuf,
    scenario: Scenario,
    files: Vec<String>,
    timings: Vec<(String, f64)>,
    summary: Vec<String>,
    started: Instant,
}

impl Output {
    /// Creates `dir` and writes a manifest marking the run as started.
    pub fn create(dir: &Path, scenario: &Scenario) -> io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let out = Self {
            dir: dir.to_path_buf(),
            scenario: scenario.clone(),
            files: Vec::new(),
            timings: Vec::new(),
            summary: Vec::new(),
            started: Instant::now(),
        };
        out.write_manifest("running", None)?;
        Ok(out)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    fn path_for(&mut self, rel: &str) -> io::Result<PathBuf> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        if !self.files.iter().any(|f| f == rel) {
            self.files.push(rel.to_string());
        }
        Ok(path)
    }

    pub fn write_text(&mut self, rel: &str, content: &str) -> io::Result<()> {
        let path = self.path_for(rel)?;
        std::fs::write(path, content)
    }

    pub fn csv(&mut self, rel: &str, header: &str) -> io::Result<Csv> {
        let path = self.path_for(rel)?;
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{header}")?;
        Ok(Csv { w })
    }

    /// Writes `n` as `snapshots/<name>.snap` and returns the relative path.
    pub fn density_snapshot(&mut self, name: &str, n: &SpinDensityField, grid: GridSpec, t: f64) -> Result<String, crate::registry::RunError> {
        let rel = format!("snapshots/{name}.snap");
        let snap = Snapshot::from_density(name, n, grid, t)?;
        let path = self.path_for(&rel)?;
        let mut w = BufWriter::new(File::create(path)?);
        snap.write(&mut w, self.scenario.encoding())?;
        w.flush()?;
        Ok(rel)
    }

    /// Records a wall-clock phase duration for the manifest.
    pub fn time<T>(&mut self, label: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        let t0 = Instant::now();
        let r = f(self);
        self.timings.push((label.to_string(), t0.elapsed().as_secs_f64()));
        r
    }

    /// Adds a line to `summary.txt`.
    pub fn note(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    pub fn summary(&self) -> &[String] {
        &self.summary
    }

    /// Writes `summary.txt` if anything was noted and rewrites the manifest
    /// with the final status.
    pub fn finish(&mut self, status: &str, message: Option<&str>) -> io::Result<()> {
        if !self.summary.is_empty() {
            let text = self.summary.join("\n") + "\n";
            self.write_text("summary.txt", &text)?;
        }
        let total = self.started.elapsed().as_secs_f64();
        self.timings.push(("total".into(), total));
        self.write_manifest(status, message)
    }

    fn write_manifest(&self, status: &str, message: Option<&str>) -> io::Result<()> {
        let mut run = toml::Table::new();
        run.insert("name".into(), self.scenario.name.clone().into());
        run.insert("model".into(), self.scenario.model.clone().into());
        run.insert("code_version".into(), env!("CARGO_PKG_VERSION").into());
        run.insert("status".into(), status.into());
        if let Some(m) = message {
            run.insert("message".into(), m.into());
        }
        let files: Vec<toml::Value> = self.files.iter().map(|f| f.clone().into()).collect();
        run.insert("files".into(), files.into());
        let mut timings = toml::Table::new();
        for (k, v) in &self.timings {
            timings.insert(format!("{k}_seconds"), (*v).into());
        }
        let mut doc = toml::Table::new();
        doc.insert("run".into(), run.into());
        doc.insert("timings".into(), timings.into());
        doc.insert(
            "scenario".into(),
            toml::Value::try_from(&self.scenario).map_err(|e| io::Error::other(e.to_string()))?,
        );
        let text = toml::to_string(&doc).map_err(|e| io::Error::other(e.to_string()))?;
        std::fs::write(self.dir.join(MANIFEST), text)
    }
}

pub struct Csv {
    w: BufWriter<File>,
}

impl Csv {
    pub fn row(&mut self, fields: &[String]) -> io::Result<()> {
        writeln!(self.w, "{}", fields.join(","))
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.w.flush()
    }
}

/// Shortest round-trip form of `v`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}
