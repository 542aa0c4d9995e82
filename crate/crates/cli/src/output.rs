use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::{Format, RunConfig};
use crate::error::CliError;

/// Everything needed to reproduce one output directory.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub outputs: &'a [String],
    pub summary: &'a Value,
}

/// Writes data files into one directory, honouring the configured formats,
/// and records their names for the manifest.
#[derive(Debug)]
pub struct Sink {
    dir: PathBuf,
    formats: Vec<Format>,
    written: Vec<String>,
}

impl Sink {
    pub fn create(dir: &Path, config: &RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Output {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            formats: config.output.formats.clone(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn subdir(&self, name: &str, config: &RunConfig) -> Result<Sink, CliError> {
        Sink::create(&self.dir.join(name), config)
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Output { path, source })?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn csv(&mut self, name: &str, contents: impl FnOnce() -> String) -> Result<(), CliError> {
        if self.formats.contains(&Format::Csv) {
            self.write(&format!("{name}.csv"), &contents())?;
        }
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        if self.formats.contains(&Format::Json) {
            self.write(&format!("{name}.json"), &sensoralloc::io::to_json(value)?)?;
        }
        Ok(())
    }

    pub fn svg(&mut self, name: &str, contents: impl FnOnce() -> String) -> Result<(), CliError> {
        if self.formats.contains(&Format::Svg) {
            self.write(&format!("{name}.svg"), &contents())?;
        }
        Ok(())
    }

    /// Writes `<command>.manifest.json` listing everything written so far.
    pub fn finish(mut self, command: &str, config: &RunConfig, summary: &Value) -> Result<PathBuf, CliError> {
        let name = format!("{command}.manifest.json");
        let outputs = self.written.clone();
        let manifest = Manifest {
            tool: "sensoralloc",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            outputs: &outputs,
            summary,
        };
        self.write(&name, &sensoralloc::io::to_json(&manifest)?)?;
        Ok(self.dir.join(name))
    }
}
