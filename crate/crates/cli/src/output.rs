//! Output directory bookkeeping: artifact list, plot schema, manifest and
//! timing files.

use std::path::{Path, PathBuf};
use std::time::Duration;

use cloudlap::io;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, Serialize)]
struct Curve {
    file: String,
    x: String,
    y: String,
    title: String,
    log_x: bool,
    log_y: bool,
}

#[derive(Serialize)]
struct PlotSchema<'a> {
    format: &'static str,
    curves: &'a [Curve],
}

#[derive(Serialize)]
struct Versions {
    cloudlap: &'static str,
    cloudlap_cli: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: &'a Value,
    config_hash: String,
    versions: Versions,
    status: &'a str,
    outputs: Vec<String>,
    /// Wall time lives in this file so the manifest itself is reproducible.
    timing: &'static str,
}

#[derive(Serialize)]
struct Timing<'a> {
    command: &'a str,
    wall_seconds: f64,
    threads: usize,
}

pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
    curves: Vec<Curve>,
}

fn io_err(e: cloudlap::CloudError) -> CliError {
    CliError::Usage(format!("cannot write output: {e}"))
}

/// SHA-256 of the compact JSON form (keys sorted).
pub fn config_hash(config: &Value) -> String {
    let text = serde_json::to_string(config).expect("JSON value serializes");
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir.join("plots"))
            .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            curves: Vec::new(),
        })
    }

    /// Path of a new artifact, recorded in the manifest.
    pub fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let p = self.path(name);
        io::write_json(&p, value).map_err(io_err)
    }

    pub fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let p = self.path(name);
        io::write_table(&p, header, rows).map_err(io_err)
    }

    pub fn with<F>(&mut self, name: &str, write: F) -> Result<(), CliError>
    where
        F: FnOnce(&Path) -> cloudlap::Result<()>,
    {
        let p = self.path(name);
        write(&p).map_err(io_err)
    }

    /// `plots/<name>.dat` plus its schema entry.
    #[allow(clippy::too_many_arguments)]
    pub fn curve(
        &mut self,
        name: &str,
        title: &str,
        x: &str,
        y: &str,
        xs: &[f64],
        ys: &[f64],
        log: bool,
    ) -> Result<(), CliError> {
        let file = format!("plots/{name}.dat");
        let p = self.path(&file);
        io::write_curve(&p, x, y, xs, ys).map_err(io_err)?;
        self.curves.push(Curve {
            file,
            x: x.to_string(),
            y: y.to_string(),
            title: title.to_string(),
            log_x: log,
            log_y: log,
        });
        Ok(())
    }

    pub fn finish(
        mut self,
        command: &str,
        config: &Value,
        pass: bool,
        wall: Duration,
        threads: usize,
    ) -> Result<(), CliError> {
        let curves = std::mem::take(&mut self.curves);
        self.json(
            "plots/schema.json",
            &PlotSchema {
                format: "whitespace-separated columns x y; '#' header names the columns",
                curves: &curves,
            },
        )?;
        let mut outputs = self.files.clone();
        outputs.sort();
        let manifest = Manifest {
            command,
            config,
            config_hash: config_hash(config),
            versions: Versions {
                cloudlap: cloudlap::VERSION,
                cloudlap_cli: env!("CARGO_PKG_VERSION"),
            },
            status: if pass { "pass" } else { "fail" },
            outputs,
            timing: "timing.json",
        };
        io::write_json(&self.dir.join("manifest.json"), &manifest).map_err(io_err)?;
        io::write_json(
            &self.dir.join("timing.json"),
            &Timing {
                command,
                wall_seconds: wall.as_secs_f64(),
                threads,
            },
        )
        .map_err(io_err)
    }
}
