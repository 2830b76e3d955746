//! CSV and JSON formats shared by the command-line tools.
//!
//! Numbers are written as `{:.16e}` (17 significant digits), one header
//! row, LF line endings.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bvp::{Grid, GridSolution, Stencil};
use crate::error::{Error, Result};
use crate::modulation::{ModulationPoint, ModulationTable};

/// Column order of modulation tables.
pub const TABLE_COLUMNS: [&str; 12] = ["z", "l1", "l2", "l3", "k", "q", "A", "B", "C", "R", "Q", "f"];

pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &str, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.to_string(),
        reason: e.to_string(),
    }
}

/// Write numeric rows under `header`.
pub fn write_csv<W: Write>(w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(header).map_err(|e| io_err("<csv>", e))?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Invalid(format!("row of {} values for {} columns", row.len(), header.len())));
        }
        out.write_record(row.iter().map(|v| format_number(*v)))
            .map_err(|e| io_err("<csv>", e))?;
    }
    out.flush().map_err(|e| io_err("<csv>", e))?;
    Ok(())
}

/// Header and numeric rows of a CSV stream.
pub fn read_csv<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header: Vec<String> = rd
        .headers()
        .map_err(|e| io_err("<csv>", e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| io_err("<csv>", e))?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| Error::Invalid(format!("data row {}: {f:?}: {e}", line + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn expect_header(found: &[String], want: &[&str]) -> Result<()> {
    if found.len() != want.len() || found.iter().zip(want).any(|(a, b)| a != b) {
        return Err(Error::Invalid(format!("expected columns {want:?}, found {found:?}")));
    }
    Ok(())
}

pub fn write_table<W: Write>(w: W, table: &ModulationTable) -> Result<()> {
    let rows = table.iter().map(|p| {
        vec![
            p.z,
            p.l1,
            p.l2,
            p.l3,
            p.k,
            p.q,
            p.amplitude,
            p.inner_scale,
            p.offset,
            p.r,
            p.phase_gradient,
            p.phase_profile,
        ]
    });
    write_csv(w, &TABLE_COLUMNS, rows)
}

/// Rows are taken as written; no re-solve.
pub fn read_table<R: Read>(r: R) -> Result<ModulationTable> {
    let (header, rows) = read_csv(r)?;
    expect_header(&header, &TABLE_COLUMNS)?;
    let points = rows
        .into_iter()
        .map(|c| ModulationPoint {
            z: c[0],
            l1: c[1],
            l2: c[2],
            l3: c[3],
            k: c[4],
            q: c[5],
            amplitude: c[6],
            inner_scale: c[7],
            offset: c[8],
            r: c[9],
            phase_gradient: c[10],
            phase_profile: c[11],
        })
        .collect();
    ModulationTable::new(points)
}

/// Sidecar metadata of a solution CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionMeta {
    pub t: f64,
    pub h: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub stencil: Stencil,
    pub residual: f64,
    pub residual_floor: f64,
    pub iterations: usize,
}

impl SolutionMeta {
    pub fn of(sol: &GridSolution) -> Self {
        SolutionMeta {
            t: sol.t,
            h: sol.grid.h,
            x_min: sol.grid.x_min,
            x_max: sol.grid.x_max(),
            n: sol.grid.n,
            stencil: sol.stencil,
            residual: sol.residual,
            residual_floor: sol.residual_floor,
            iterations: sol.iterations,
        }
    }
}

/// `solution.csv` becomes `solution.meta.json`.
pub fn meta_path(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("meta.json")
}

pub fn write_solution<W: Write>(w: W, sol: &GridSolution) -> Result<()> {
    let xs = sol.x();
    write_csv(w, &["x", "u"], xs.into_iter().zip(&sol.u).map(|(x, u)| vec![x, *u]))
}

/// Rebuild a solution from its CSV and sidecar metadata.
pub fn read_solution(csv_path: &Path) -> Result<GridSolution> {
    let shown = csv_path.display().to_string();
    let meta_file = meta_path(csv_path);
    let meta: SolutionMeta = serde_json::from_str(
        &fs::read_to_string(&meta_file).map_err(|e| io_err(&meta_file.display().to_string(), e))?,
    )
    .map_err(|e| io_err(&meta_file.display().to_string(), e))?;
    let file = fs::File::open(csv_path).map_err(|e| io_err(&shown, e))?;
    let (header, rows) = read_csv(file)?;
    expect_header(&header, &["x", "u"])?;
    let grid = Grid::new(meta.x_min, meta.x_max, meta.h)?;
    if grid.n != rows.len() || grid.n != meta.n {
        return Err(io_err(&shown, format!("{} rows for a {}-point grid", rows.len(), grid.n)));
    }
    for (i, r) in rows.iter().enumerate() {
        if (r[0] - grid.x(i)).abs() > 1e-9 * (1.0 + r[0].abs()) {
            return Err(io_err(&shown, format!("row {} has x = {} off the grid", i + 1, r[0])));
        }
    }
    Ok(GridSolution {
        t: meta.t,
        grid,
        stencil: meta.stencil,
        u: rows.iter().map(|r| r[1]).collect(),
        residual: meta.residual,
        residual_floor: meta.residual_floor,
        iterations: meta.iterations,
    })
}

/// Write `bytes` to a sibling temporary file and rename it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let shown = path.display().to_string();
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| io_err(&shown, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(&shown, e))
}
