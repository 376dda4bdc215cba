//! Output directory handling and the run logger.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{Context, Result};
use log::{LevelFilter, Log, Metadata, Record};
use shadowgen_core::generator::write_atomic;

pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let p = self.path(name);
        write_atomic(&p, contents.as_bytes()).with_context(|| format!("writing {}", p.display()))?;
        log::info!("wrote {name}");
        Ok(p)
    }
}

/// Mirrors records to stderr and to `run.log` in the output directory.
struct RunLogger {
    level: LevelFilter,
    file: Mutex<Option<File>>,
}

static LOGGER: RunLogger = RunLogger { level: LevelFilter::Trace, file: Mutex::new(None) };

impl Log for RunLogger {
    fn enabled(&self, meta: &Metadata) -> bool {
        meta.level() <= self.level
    }

    fn log(&self, record: &Record) {
        if !self.enabled(record.metadata()) {
            return;
        }
        let line = format!("[{}] {}", record.level().as_str().to_ascii_lowercase(), record.args());
        eprintln!("{line}");
        if let Ok(mut guard) = self.file.lock() {
            if let Some(f) = guard.as_mut() {
                let _ = writeln!(f, "{line}");
            }
        }
    }

    fn flush(&self) {
        if let Ok(mut guard) = self.file.lock() {
            if let Some(f) = guard.as_mut() {
                let _ = f.flush();
            }
        }
    }
}

pub fn init_logger(level: LevelFilter) {
    if log::set_logger(&LOGGER).is_ok() {
        log::set_max_level(level);
    }
}

/// Start (or restart) `run.log` inside `dir`.
pub fn attach_log_file(dir: &RunDir) -> Result<()> {
    let f = File::create(dir.path("run.log")).context("creating run.log")?;
    *LOGGER.file.lock().expect("logger lock") = Some(f);
    Ok(())
}

pub fn flush_log() {
    log::logger().flush();
}
