//! CSV serialization of patches and diagnostics series.
//!
//! Numbers are written with 17 significant digits so files reread to
//! bitwise-equal values. Snapshot rows are in row-major grid order: the
//! first grid index outermost.

use crate::diagnostics::{DiagRow, DiagnosticsSeries};
use crate::error::{Error, Result};
use crate::flow::FlowState;
use crate::grids::{CartesianPatch, CylindricalPatch};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write `cart_<index>.csv` and `cyl_<index>.csv` into `dir`.
pub fn write_snapshot(state: &FlowState, dir: &Path, index: usize) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    let cart_path = dir.join(format!("cart_{index}.csv"));
    let cyl_path = dir.join(format!("cyl_{index}.csv"));
    write_cartesian_csv(&state.cart, &cart_path)?;
    write_cylindrical_csv(&state.cyl, &cyl_path)?;
    Ok((cart_path, cyl_path))
}

pub fn write_cartesian_csv(p: &CartesianPatch, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "t,x,y,z")?;
    let t = fmt_f(p.t());
    for i in 0..p.nx() {
        let x = fmt_f(p.x(i));
        for k in 0..p.ny() {
            writeln!(w, "{t},{x},{},{}", fmt_f(p.y(k)), fmt_f(p.z(i, k)))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_cylindrical_csv(p: &CylindricalPatch, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "t,z,theta,r")?;
    let t = fmt_f(p.t());
    for i in 0..p.nz() {
        let z = fmt_f(p.z(i));
        for k in 0..p.ntheta() {
            writeln!(w, "{t},{z},{},{}", fmt_f(p.theta(k)), fmt_f(p.r(i, k)))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_rows(path: &Path, header: &str) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == header => {}
        Some(h) => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header `{header}`, got `{h}`"),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "empty file".into(),
            })
        }
    }
    let ncols = header.split(',').count();
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(ncols);
        for field in line.split(',') {
            row.push(field.parse::<f64>().map_err(|_| Error::Parse {
                line: idx + 2,
                msg: format!("`{field}` is not a number"),
            })?);
        }
        if row.len() != ncols {
            return Err(Error::Parse {
                line: idx + 2,
                msg: format!("expected {ncols} columns, got {}", row.len()),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_cartesian_csv(path: &Path) -> Result<CartesianPatch> {
    let rows = read_rows(path, "t,x,y,z")?;
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 2,
            msg: "snapshot has no rows".into(),
        });
    }
    let t = rows[0][0];
    let x0 = rows[0][1];
    let ny = rows.iter().take_while(|r| r[1] == x0).count();
    if ny == 0 || rows.len() % ny != 0 {
        return Err(Error::Parse {
            line: 2,
            msg: format!("row count {} is not a multiple of ny = {ny}", rows.len()),
        });
    }
    let nx = rows.len() / ny;
    let side = rows[rows.len() - 1][1] - x0;
    let z: Vec<f64> = rows.iter().map(|r| r[3]).collect();
    CartesianPatch::from_values(side, nx, ny, t, z)
}

pub fn read_cylindrical_csv(path: &Path) -> Result<CylindricalPatch> {
    let rows = read_rows(path, "t,z,theta,r")?;
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 2,
            msg: "snapshot has no rows".into(),
        });
    }
    let t = rows[0][0];
    let z0 = rows[0][1];
    let ntheta = rows.iter().take_while(|r| r[1] == z0).count();
    if ntheta == 0 || rows.len() % ntheta != 0 {
        return Err(Error::Parse {
            line: 2,
            msg: format!("row count {} is not a multiple of ntheta = {ntheta}", rows.len()),
        });
    }
    let nz = rows.len() / ntheta;
    let z_max = rows[rows.len() - 1][1];
    let r: Vec<f64> = rows.iter().map(|r| r[3]).collect();
    CylindricalPatch::from_values(z0, z_max, nz, ntheta, t, r)
}

fn series_header(mode_max: usize) -> String {
    let mut h = String::from("t,dt,tip_A,r_min,z_neck,mismatch,a0");
    for m in 1..=mode_max {
        let _ = write!(h, ",a{m},b{m}");
    }
    h
}

/// Write `series.csv` into `dir`.
pub fn write_series(series: &DiagnosticsSeries, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join("series.csv");
    let file = fs::File::create(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", series_header(series.mode_max))?;
    for row in series.rows() {
        write!(
            w,
            "{},{},{},{},{},{}",
            fmt_f(row.t),
            fmt_f(row.dt),
            fmt_f(row.tip_a),
            fmt_f(row.r_min),
            fmt_f(row.z_neck),
            fmt_f(row.mismatch)
        )?;
        for v in &row.modes {
            write!(w, ",{}", fmt_f(*v))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(path)
}

pub fn read_series(path: &Path) -> Result<DiagnosticsSeries> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty series file".into(),
    })?;
    let ncols = header.split(',').count();
    if ncols < 7 || (ncols - 7) % 2 != 0 {
        return Err(Error::Parse {
            line: 1,
            msg: format!("series header has {ncols} columns; expected 7 + 2M"),
        });
    }
    let mode_max = (ncols - 7) / 2;
    if header != series_header(mode_max) {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected series header `{header}`"),
        });
    }
    let mut series = DiagnosticsSeries::new(mode_max);
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    line: idx + 2,
                    msg: format!("`{f}` is not a number"),
                })
            })
            .collect::<Result<_>>()?;
        if fields.len() != ncols {
            return Err(Error::Parse {
                line: idx + 2,
                msg: format!("expected {ncols} columns, got {}", fields.len()),
            });
        }
        series.push(DiagRow {
            t: fields[0],
            dt: fields[1],
            tip_a: fields[2],
            r_min: fields[3],
            z_neck: fields[4],
            mismatch: fields[5],
            modes: fields[6..].to_vec(),
        })?;
    }
    Ok(series)
}
