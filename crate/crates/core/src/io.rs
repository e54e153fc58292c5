//! File formats shared by the command-line tools.
//!
//! Text grid: first line `rows cols`, then the values in row-major order,
//! one grid row per line, each printed with 17 significant digits so that
//! every `f64` round-trips bit-exactly.
//!
//! Signals: one real per line, no header.
//!
//! All writers go through [`write_atomic`], which writes a sibling temporary
//! file and renames it over the destination.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, PointGrid};

/// Writes `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn fmt_real(out: &mut String, v: f64) {
    // 17 significant digits
    write!(out, "{v:.16e}").expect("writing to a String cannot fail");
}

pub fn format_grid(grid: &Grid) -> String {
    let mut out = String::with_capacity(grid.len() * 24 + 16);
    writeln!(out, "{} {}", grid.rows(), grid.cols()).unwrap();
    for r in 0..grid.rows() {
        for c in 0..grid.cols() {
            if c > 0 {
                out.push(' ');
            }
            fmt_real(&mut out, grid.get(r, c));
        }
        out.push('\n');
    }
    out
}

pub fn parse_grid(text: &str) -> Result<Grid> {
    let mut tokens = text.split_whitespace();
    let mut dim = |what: &str| -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| Error::Parse(format!("missing {what} in grid header")))?
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("bad {what} in grid header: {e}")))
    };
    let rows = dim("rows")?;
    let cols = dim("cols")?;
    let data = tokens
        .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("bad grid value {t:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if data.len() != rows * cols {
        return Err(Error::Parse(format!("grid header says {rows}x{cols} but {} values follow", data.len())));
    }
    Grid::new(rows, cols, data)
}

pub fn read_grid(path: &Path) -> Result<Grid> {
    parse_grid(&std::fs::read_to_string(path)?)
}

pub fn write_grid(path: &Path, grid: &Grid) -> Result<()> {
    write_atomic(path, format_grid(grid).as_bytes())
}

/// Paths of the three component files of a point grid: `<prefix>_x.txt` etc.
pub fn point_grid_paths(prefix: &Path) -> [std::path::PathBuf; 3] {
    let base = prefix.as_os_str().to_string_lossy().into_owned();
    ["x", "y", "z"].map(|c| std::path::PathBuf::from(format!("{base}_{c}.txt")))
}

pub fn write_point_grid(prefix: &Path, grid: &PointGrid) -> Result<()> {
    for (path, comp) in point_grid_paths(prefix).iter().zip(grid.components().iter()) {
        write_grid(path, comp)?;
    }
    Ok(())
}

pub fn read_point_grid(prefix: &Path) -> Result<PointGrid> {
    let [px, py, pz] = point_grid_paths(prefix);
    PointGrid::from_components(&read_grid(&px)?, &read_grid(&py)?, &read_grid(&pz)?)
}

pub fn parse_signal(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.parse::<f64>().map_err(|e| Error::Parse(format!("bad signal value {l:?}: {e}"))))
        .collect()
}

pub fn format_signal(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 24);
    for &v in values {
        fmt_real(&mut out, v);
        out.push('\n');
    }
    out
}

pub fn read_signal(path: &Path) -> Result<Vec<f64>> {
    parse_signal(&std::fs::read_to_string(path)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}
