//! `timeseries.csv`: one [`DiagnosticsRow`] per line.

use std::io::{self, BufRead, Write};
use std::path::Path;

use super::DiagnosticsRow;
use crate::error::{Error, Result};
use crate::grid::snapshot::fmt_f64;

pub const FILE_NAME: &str = "timeseries.csv";

pub const HEADER: [&str; 19] = [
    "t",
    "mass_u",
    "mass_w",
    "mass_h",
    "max_u",
    "max_h",
    "max_v",
    "max_w",
    "min_v",
    "entropy_u",
    "dirichlet_h",
    "dirichlet_v",
    "dirichlet_w",
    "l2_w",
    "F",
    "D",
    "dt",
    "clipped_mass",
    "lin_iters",
];

fn floats(row: &DiagnosticsRow) -> [f64; 18] {
    [
        row.t,
        row.mass_u,
        row.mass_w,
        row.mass_h,
        row.max_u,
        row.max_h,
        row.max_v,
        row.max_w,
        row.min_v,
        row.entropy_u,
        row.dirichlet_h,
        row.dirichlet_v,
        row.dirichlet_w,
        row.l2_w,
        row.energy,
        row.dissipation,
        row.dt,
        row.clipped_mass,
    ]
}

pub fn write_header<W: Write>(out: &mut W) -> io::Result<()> {
    writeln!(out, "{}", HEADER.join(","))
}

pub fn write_row<W: Write>(out: &mut W, row: &DiagnosticsRow) -> io::Result<()> {
    for x in floats(row) {
        write!(out, "{},", fmt_f64(x))?;
    }
    writeln!(out, "{}", row.lin_iterations)
}

/// Full CSV text for `rows`.
pub fn to_csv(rows: &[DiagnosticsRow]) -> String {
    let mut buf = Vec::new();
    write_header(&mut buf).expect("writing to memory");
    for row in rows {
        write_row(&mut buf, row).expect("writing to memory");
    }
    String::from_utf8(buf).expect("ascii")
}

pub fn write(path: &Path, rows: &[DiagnosticsRow]) -> Result<()> {
    std::fs::write(path, to_csv(rows)).map_err(|e| Error::io(path, e))
}

/// Reads a timeseries file back. Unknown or reordered columns are errors.
pub fn read(path: &Path) -> Result<Vec<DiagnosticsRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = io::BufReader::new(file).lines();
    let bad = |msg: String| Error::Input(format!("{}: {msg}", path.display()));
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::io(path, e))?
        .unwrap_or_default();
    if header != HEADER.join(",") {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != HEADER.len() {
            return Err(bad(format!(
                "line {}: expected {} columns",
                k + 2,
                HEADER.len()
            )));
        }
        let mut x = [0.0; 18];
        for (slot, c) in x.iter_mut().zip(&cols) {
            *slot = c
                .parse()
                .map_err(|_| bad(format!("line {}: bad number {c:?}", k + 2)))?;
        }
        let lin_iterations = cols[18]
            .parse()
            .map_err(|_| bad(format!("line {}: bad count", k + 2)))?;
        rows.push(DiagnosticsRow {
            t: x[0],
            mass_u: x[1],
            mass_w: x[2],
            mass_h: x[3],
            max_u: x[4],
            max_h: x[5],
            max_v: x[6],
            max_w: x[7],
            min_v: x[8],
            entropy_u: x[9],
            dirichlet_h: x[10],
            dirichlet_v: x[11],
            dirichlet_w: x[12],
            l2_w: x[13],
            energy: x[14],
            dissipation: x[15],
            dt: x[16],
            clipped_mass: x[17],
            lin_iterations,
        });
    }
    Ok(rows)
}
