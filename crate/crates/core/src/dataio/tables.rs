//! CSV emission. Every float is written in scientific notation with 17
//! significant digits, which round-trips `f64` exactly; lines end in LF.

use std::path::Path;

use crate::dynamics::{ConvergenceRow, Trajectory};
use crate::error::{Error, Result};
use crate::measure::GridMeasure;

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// `x_mid,<name1>[,<name2>…]` with one row per abscissa.
pub fn pdf_table_csv(x: &[f64], series: &[(&str, &[f64])]) -> Result<String> {
    if series.is_empty() {
        return Err(Error::invalid("series", "need at least one value column"));
    }
    if let Some((name, s)) = series.iter().find(|(_, s)| s.len() != x.len()) {
        return Err(Error::invalid("series", format!("column `{name}` has {} rows, expected {}", s.len(), x.len())));
    }
    let mut out = String::from("x_mid");
    for (name, _) in series {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, &xi) in x.iter().enumerate() {
        out.push_str(&format_float(xi));
        for (_, s) in series {
            out.push(',');
            out.push_str(&format_float(s[i]));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `x_mid,pdf[,pdf2]`-style tables.
pub fn write_pdf_table(path: impl AsRef<Path>, x: &[f64], series: &[(&str, &[f64])]) -> Result<()> {
    write_text(path, &pdf_table_csv(x, series)?)
}

/// `x_mid,mass,pdf` for one measure.
pub fn measure_csv(mu: &GridMeasure) -> String {
    let grid = mu.grid();
    let n = grid.n_cells() as f64;
    let mut out = String::from("x_mid,mass,pdf\n");
    for (i, &m) in mu.masses().iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", format_float(grid.midpoint(i)), format_float(m), format_float(n * m)));
    }
    out
}

/// `time,x_mid,pdf`, snapshot by snapshot.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("time,x_mid,pdf\n");
    for snap in &traj.snapshots {
        let grid = snap.measure.grid();
        let t = format_float(snap.time);
        for (i, p) in snap.measure.pdf_values().into_iter().enumerate() {
            out.push_str(&format!("{t},{},{}\n", format_float(grid.midpoint(i)), format_float(p)));
        }
    }
    out
}

/// `eta,time,error,rate`, with an empty rate for the largest η.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("eta,time,error,rate\n");
    for r in rows {
        let rate = r.rate.map(format_float).unwrap_or_default();
        out.push_str(&format!("{},{},{},{rate}\n", format_float(r.eta), format_float(r.time), format_float(r.error)));
    }
    out
}
