//! CSV and JSON artifacts. Numbers in CSV files carry 17 significant digits
//! so that every value round-trips exactly.

use std::path::Path;

use serde::Serialize;

use muskat_core::functionals::DiagnosticsLedger;
use muskat_core::solver::Frame;
use muskat_core::support::SupportTrace;
use muskat_core::Grid;

use crate::error::{HarnessError, Result};

pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn record<I, S>(w: &mut csv::Writer<std::fs::File>, path: &Path, fields: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(fields).map_err(|source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

/// Long format: one row per (snapshot time, cell).
pub fn write_snapshots(path: &Path, grid: &Grid, frames: &[Frame]) -> Result<()> {
    let mut w = writer(path)?;
    record(&mut w, path, ["t", "x", "f", "g"])?;
    for fr in frames {
        for (i, x) in grid.centers().iter().enumerate() {
            record(
                &mut w,
                path,
                [sci(fr.t), sci(*x), sci(fr.state.f[i]), sci(fr.state.g[i])],
            )?;
        }
    }
    finish(w, path)
}

pub fn write_ledger(path: &Path, ledger: &DiagnosticsLedger) -> Result<()> {
    let mut w = writer(path)?;
    record(
        &mut w,
        path,
        [
            "t",
            "mass_f",
            "mass_g",
            "energy",
            "entropy",
            "energy_eps",
            "m2",
            "m2_inner",
            "d_energy",
            "d_entropy",
        ],
    )?;
    for r in &ledger.rows {
        record(
            &mut w,
            path,
            [
                r.t,
                r.mass_f,
                r.mass_g,
                r.energy,
                r.entropy,
                r.energy_eps,
                r.m2,
                r.m2_inner,
                r.d_energy,
                r.d_entropy,
            ]
            .map(sci),
        )?;
    }
    finish(w, path)
}

/// Columns `t, left, right` for `f + g`, then the per-species edges; empty
/// fields where a support is empty.
pub fn write_support(path: &Path, trace: &SupportTrace) -> Result<()> {
    let mut w = writer(path)?;
    record(
        &mut w,
        path,
        [
            "t", "left", "right", "f_left", "f_right", "g_left", "g_right",
        ],
    )?;
    for s in &trace.samples {
        let pair = |e: Option<(f64, f64)>| (opt(e.map(|p| p.0)), opt(e.map(|p| p.1)));
        let (l, r) = pair(s.total);
        let (fl, fr) = pair(s.f);
        let (gl, gr) = pair(s.g);
        record(&mut w, path, [sci(s.t), l, r, fl, fr, gl, gr])?;
    }
    finish(w, path)
}

/// Reads `t, left, right` columns of a support CSV written by
/// [`write_support`]; rows with an empty support are kept as `None`.
pub fn read_support(path: &Path) -> Result<Vec<(f64, Option<(f64, f64)>)>> {
    let mut rd = csv::Reader::from_path(path).map_err(|source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |line: Option<usize>, m: String| HarnessError::Config {
        path: Some(path.to_path_buf()),
        line,
        message: m,
    };
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|source| HarnessError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let line = rec.position().map(|p| p.line() as usize);
        let num = |i: usize| -> Result<Option<f64>> {
            match rec.get(i).map(str::trim) {
                None | Some("") => Ok(None),
                Some(s) => s
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|e| bad(line, format!("column {i}: {e}"))),
            }
        };
        let t = num(0)?.ok_or_else(|| bad(line, "missing time".into()))?;
        let edges = match (num(1)?, num(2)?) {
            (Some(l), Some(r)) => Some((l, r)),
            _ => None,
        };
        out.push((t, edges));
    }
    Ok(out)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}
