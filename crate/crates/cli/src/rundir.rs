use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use frontlab::io::{write_csv_file, write_svg, LinePlot, RunManifest, Table};
use frontlab::params::ModelParams;
use serde::Serialize;

pub const ERROR_FILE: &str = "error.txt";

/// Marks an error raised after the run directory existed.
#[derive(Debug)]
pub struct RunFailed {
    pub dir: PathBuf,
}

impl std::fmt::Display for RunFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "run failed; diagnostics in {}", self.dir.join(ERROR_FILE).display())
    }
}

impl std::error::Error for RunFailed {}

pub struct RunDir {
    path: PathBuf,
    pub manifest: RunManifest,
    started: Instant,
}

impl RunDir {
    pub fn create(out: &Path, command: &str, config_text: &str, params: Option<&ModelParams>) -> Result<Self> {
        let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string();
        let base = frontlab::io::run_dir_name(&stamp, command, config_text);
        let mut path = out.join(&base);
        let mut n = 1;
        while path.exists() {
            path = out.join(format!("{base}-{n}"));
            n += 1;
        }
        fs::create_dir_all(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Self { path, manifest: RunManifest::new(command, config_text, params), started: Instant::now() })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn option(&mut self, key: &str, value: impl ToString) {
        self.manifest.options.insert(key.into(), value.to_string());
    }

    pub fn record(&mut self, rel: &str) -> Result<()> {
        self.manifest.record_output(&self.path, rel)?;
        Ok(())
    }

    pub fn csv(&mut self, rel: &str, table: &Table) -> Result<()> {
        write_csv_file(&self.path.join(rel), table)?;
        self.record(rel)
    }

    pub fn svg(&mut self, rel: &str, plot: &LinePlot) -> Result<()> {
        write_svg(&self.path.join(rel), plot)?;
        self.record(rel)
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let p = self.path.join(rel);
        fs::write(&p, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", p.display()))?;
        self.record(rel)
    }

    fn close(&mut self, truncated: bool) -> Result<()> {
        self.manifest.wall_clock_secs = self.started.elapsed().as_secs_f64();
        self.manifest.truncated = truncated;
        self.manifest.write(&self.path)?;
        Ok(())
    }
}

/// Runs `body`; on success writes the manifest and prints the summary, on
/// failure leaves `error.txt` and a truncated manifest behind.
pub fn execute<F>(mut run: RunDir, body: F) -> Result<()>
where
    F: FnOnce(&mut RunDir) -> Result<String>,
{
    match body(&mut run) {
        Ok(summary) => {
            run.close(false)?;
            println!("{summary}");
            println!("outputs: {}", run.path.display());
            Ok(())
        }
        Err(err) => {
            let _ = fs::write(run.path.join(ERROR_FILE), format!("{err:#}\n"));
            let _ = run.close(true);
            Err(err.context(RunFailed { dir: run.path.clone() }))
        }
    }
}
