//! CSV and JSON output. Floats are written with 17 significant digits so
//! every value round-trips exactly.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

/// Environment variable overriding the output root.
pub const OUTPUT_DIR_ENV: &str = "KHESSIAN_OUTPUT_DIR";

/// Default output root when neither a flag nor the environment sets one.
pub const DEFAULT_OUTPUT_DIR: &str = "khessian-out";

/// Resolves the output root: explicit value, then the environment, then the default.
pub fn output_root(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `header` and one row per entry of `rows`.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.into_iter().map(format_float).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Reads the last column of a numeric CSV with a header line.
pub fn read_profile_column(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    lines.next();
    lines
        .map(|(i, line)| {
            let field = line.rsplit(',').next().unwrap_or("").trim();
            field.parse::<f64>().map_err(|_| {
                crate::Error::invalid(format!("{}:{}: not a number: '{field}'", path.display(), i + 1))
            })
        })
        .collect()
}
