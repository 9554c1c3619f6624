//! Plain-text artifact formats: point clouds, graph functions, residual
//! sweeps.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{CloudError, Result};
use crate::geom::{self, Point};
use crate::manifold::{Manifold, ManifoldKind};

/// Full double precision: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_cloud(path: &Path, manifold: &Manifold, points: &[Point], seed: u64) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let d = manifold.ambient_dim();
    writeln!(
        out,
        "# manifold={} n={} d={} seed={}",
        manifold.kind,
        points.len(),
        d,
        seed
    )?;
    for p in points {
        let row: Vec<String> = p[..d].iter().map(|v| fmt_f64(*v)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Parsed point cloud file.
#[derive(Clone, Debug)]
pub struct CloudFile {
    pub manifold: Manifold,
    pub seed: u64,
    pub points: Vec<Point>,
}

pub fn read_cloud(path: &Path) -> Result<CloudFile> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut lines = file.lines();
    let header = lines
        .next()
        .ok_or_else(|| CloudError::InvalidParameter("empty cloud file".into()))??;
    let mut kind: Option<ManifoldKind> = None;
    let mut seed = 0u64;
    let mut n: Option<usize> = None;
    for field in header.trim_start_matches('#').split_whitespace() {
        if let Some((k, v)) = field.split_once('=') {
            match k {
                "manifold" => kind = Some(v.parse()?),
                "seed" => seed = v.parse().unwrap_or(0),
                "n" => n = v.parse().ok(),
                _ => {}
            }
        }
    }
    let manifold = Manifold::new(
        kind.ok_or_else(|| CloudError::InvalidParameter("cloud header lacks manifold=".into()))?,
    );
    let mut points = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|e| CloudError::InvalidParameter(format!("bad cloud row: {e}")))?;
        if vals.len() != manifold.ambient_dim() {
            return Err(CloudError::ShapeMismatch {
                expected: manifold.ambient_dim(),
                got: vals.len(),
            });
        }
        let p = geom::from_slice(&vals);
        manifold.check_point(&p)?;
        points.push(p);
    }
    if let Some(n) = n {
        if n != points.len() {
            return Err(CloudError::ShapeMismatch {
                expected: n,
                got: points.len(),
            });
        }
    }
    Ok(CloudFile {
        manifold,
        seed,
        points,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FunctionSidecar {
    pub experiment: String,
    pub n: usize,
    pub description: String,
}

/// Single-column CSV of function values plus a JSON sidecar.
pub fn write_function(
    csv_path: &Path,
    sidecar_path: &Path,
    values: &[f64],
    experiment: &str,
    description: &str,
) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(csv_path)?);
    writeln!(out, "value")?;
    for v in values {
        writeln!(out, "{}", fmt_f64(*v))?;
    }
    out.flush()?;
    let side = FunctionSidecar {
        experiment: experiment.to_string(),
        n: values.len(),
        description: description.to_string(),
    };
    std::fs::write(sidecar_path, serde_json::to_string_pretty(&side)? + "\n")?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Writes a CSV with a header row and preformatted cells.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for r in rows {
        writeln!(out, "{}", r.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Two-column data file for one plotted curve.
pub fn write_curve(path: &Path, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# {x_label} {y_label}")?;
    for (x, y) in xs.iter().zip(ys) {
        writeln!(out, "{} {}", fmt_f64(*x), fmt_f64(*y))?;
    }
    out.flush()?;
    Ok(())
}
