use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Seventeen significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comma-separated table with a header row and LF line endings.
pub fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// A row of floats in [`fmt_float`] format.
pub fn float_row(values: &[f64]) -> Vec<String> {
    values.iter().map(|x| fmt_float(*x)).collect()
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let io_err = |path: &Path, source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let target = dir.join(name);
    let temp = dir.join(format!(".{name}.tmp"));
    let mut file = fs::File::create(&temp).map_err(|e| io_err(&temp, e))?;
    file.write_all(contents.as_bytes())
        .map_err(|e| io_err(&temp, e))?;
    file.sync_all().map_err(|e| io_err(&temp, e))?;
    fs::rename(&temp, &target).map_err(|e| io_err(&target, e))?;
    Ok(target)
}
