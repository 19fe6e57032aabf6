//! Output directory handling: tidy CSV files and the run manifest.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use snn_tmvn::io::format_f64;

use crate::config::Settings;
use crate::error::{CliError, CliResult};

pub type CsvWriter = csv::Writer<BufWriter<File>>;

/// An output directory that remembers the files written into it.
pub struct OutDir {
    path: PathBuf,
    files: Vec<String>,
    timings: Vec<(String, f64)>,
    started: Instant,
}

impl OutDir {
    pub fn create(path: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self { path: path.to_path_buf(), files: Vec::new(), timings: Vec::new(), started: Instant::now() })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn csv(&mut self, name: &str, header: &[&str]) -> CliResult<CsvWriter> {
        let p = self.path.join(name);
        let f = File::create(&p).map_err(|e| CliError::io(&p, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(f));
        w.write_record(header)?;
        self.files.push(name.to_string());
        Ok(w)
    }

    /// Registers a file written by other means.
    pub fn record_file(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.path.join(name)
    }

    /// Runs `f` and records its wall time under `phase`.
    pub fn timed<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.push((phase.to_string(), t.elapsed().as_secs_f64()));
        out
    }

    pub fn write_manifest(&self, settings: &Settings, status: &str, notes: &[String]) -> CliResult<()> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            subcommand: &'a str,
            status: &'a str,
            version: &'a str,
            seed: u64,
            config: &'a Settings,
            wall_times_seconds: serde_json::Map<String, serde_json::Value>,
            total_seconds: f64,
            outputs: &'a [String],
            notes: &'a [String],
        }
        let wall_times_seconds = self.timings.iter().map(|(k, v)| (k.clone(), serde_json::json!(v))).collect();
        let m = Manifest {
            subcommand: settings.scenario.name(),
            status,
            version: env!("CARGO_PKG_VERSION"),
            seed: settings.seed,
            config: settings,
            wall_times_seconds,
            total_seconds: self.started.elapsed().as_secs_f64(),
            outputs: &self.files,
            notes,
        };
        let p = self.path.join("manifest.json");
        let text = serde_json::to_string_pretty(&m).map_err(|e| CliError::Config(e.to_string()))?;
        std::fs::write(&p, text + "\n").map_err(|e| CliError::io(&p, e))
    }
}

pub fn f(v: f64) -> String {
    format_f64(v)
}

/// Long-format samples: one `(sample, site, value)` row per entry.
pub fn write_samples(w: &mut CsvWriter, rows: &[Vec<f64>], sites: &[usize]) -> CliResult<()> {
    for (k, row) in rows.iter().enumerate() {
        for (v, &site) in row.iter().zip(sites) {
            w.write_record([k.to_string(), site.to_string(), f(*v)])?;
        }
    }
    w.flush().map_err(|e| CliError::io("samples", e))
}
