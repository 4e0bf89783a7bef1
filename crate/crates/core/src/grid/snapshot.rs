//! Per-field snapshot CSV: header `x,y,value`, one row per cell in
//! row-major order, 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{Field, Grid};
use crate::error::{Error, Result};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn snapshot_path(run_dir: &Path, field: &str, step: usize) -> PathBuf {
    run_dir.join(format!("{field}_{step}.csv"))
}

pub fn field_to_csv(field: &Field) -> String {
    let g = field.grid();
    let mut out = String::with_capacity(64 * g.len() + 16);
    out.push_str("x,y,value\n");
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let (x, y) = g.center(i, j);
            let _ = writeln!(
                out,
                "{},{},{}",
                fmt_f64(x),
                fmt_f64(y),
                fmt_f64(field.get(i, j))
            );
        }
    }
    out
}

pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    fs::write(path, field_to_csv(field)).map_err(|e| Error::io(path, e))
}

/// Reads a snapshot back onto a known grid.
pub fn read_field(path: &Path, grid: Grid) -> Result<Field> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("x,y,value") {
        return Err(Error::Input(format!(
            "{}: missing `x,y,value` header",
            path.display()
        )));
    }
    let mut data = Vec::with_capacity(grid.len());
    for (n, line) in lines.enumerate() {
        let value = line
            .rsplit(',')
            .next()
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| Error::Input(format!("{}:{}: malformed row", path.display(), n + 2)))?;
        data.push(value);
    }
    Field::from_vec(grid, data)
}
