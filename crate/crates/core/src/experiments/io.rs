//! CSV and JSON outputs of the harness. Column layouts are part of the
//! versioned output schema.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::SamplingGrid;
use crate::localize::CorrelationField;
use crate::recover::SolverReport;

/// Version of the CSV/JSON layouts written by the harness.
pub const SCHEMA_VERSION: u32 = 1;

pub const PHI_PROFILE_HEADER: &[&str] = &["k", "dist", "phi_raw", "phi_monotone"];
pub const NOISE_SWEEP_HEADER: &[&str] = &["theta", "trials", "mean_px", "q1_px", "median_px", "q3_px", "max_px"];
pub const NOISE_TRIALS_HEADER: &[&str] = &["theta", "trial", "x_true", "x_hat", "error_px"];
pub const GAMMA_ERROR_HEADER: &[&str] = &["theta", "trials", "min", "q1", "median", "q3", "max", "mean"];
pub const GAMMA_TRIALS_HEADER: &[&str] = &["theta", "trial", "error_px", "gamma_rel_error"];
pub const PHASE_HEADER: &[&str] = &["K", "N", "solver", "success_rate", "trials"];
pub const SOLVER_TRACE_HEADER: &[&str] = &["iter", "objective", "rel_error_if_truth"];
pub const MC_HEADER: &[&str] = &["sigma", "trials", "z1_mean", "z1_std", "z2_mean", "z2_std", "level", "bound"];

pub fn measurement_header(dim: usize) -> Vec<String> {
    let mut h = vec!["m".to_string()];
    h.extend((1..=dim).map(|d| format!("z_{d}")));
    h.push("y".to_string());
    h
}

pub fn field_header(dim: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=dim).map(|d| format!("x_{d}")).collect();
    h.push("H".to_string());
    h
}

/// Fixed 17-significant-digit formatting.
pub fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Numerical(format!("csv: {other:?}")),
    }
}

pub fn write_csv<S: AsRef<str>>(path: &Path, header: &[S], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header.iter().map(|s| s.as_ref())).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(format!("json: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn write_measurement(path: &Path, grid: &SamplingGrid, y: &[f64]) -> Result<()> {
    let rows: Vec<Vec<String>> = (0..grid.len())
        .map(|m| {
            let mut r = vec![m.to_string()];
            r.extend(grid.point(m).iter().map(|&v| fmt(v)));
            r.push(fmt(y[m]));
            r
        })
        .collect();
    write_csv(path, &measurement_header(grid.dim()), &rows)
}

/// Read a measurement file and check it against `grid` (same count, order
/// and coordinates up to `1e-9` of the grid step).
pub fn read_measurement(path: &Path, grid: &SamplingGrid) -> Result<Vec<f64>> {
    let cfg = |msg: String| Error::Config(format!("{}: {msg}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| cfg(e.to_string()))?;
    let header: Vec<String> = r.headers().map_err(|e| cfg(e.to_string()))?.iter().map(str::to_string).collect();
    if header != measurement_header(grid.dim()) {
        return Err(cfg(format!(
            "header {:?} does not match {:?}",
            header,
            measurement_header(grid.dim())
        )));
    }
    let tol = 1e-9 * grid.min_step().unwrap_or(1.0);
    let mut y = Vec::with_capacity(grid.len());
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| cfg(format!("line {line}: {e}")))?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .ok_or_else(|| cfg(format!("line {line}: missing column {}", k + 1)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| cfg(format!("line {line}: column {}: {e}", k + 1)))
        };
        let m: usize = rec
            .get(0)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|e| cfg(format!("line {line}: index: {e}")))?;
        if m != y.len() || m >= grid.len() {
            return Err(cfg(format!("line {line}: expected sample index {}, found {m}", y.len())));
        }
        for d in 0..grid.dim() {
            let z = num(d + 1)?;
            if (z - grid.point(m)[d]).abs() > tol {
                return Err(cfg(format!("line {line}: coordinate z_{} = {z} does not match the grid", d + 1)));
            }
        }
        y.push(num(grid.dim() + 1)?);
    }
    if y.len() != grid.len() {
        return Err(cfg(format!("expected {} samples, found {}", grid.len(), y.len())));
    }
    Ok(y)
}

pub fn write_field(path: &Path, field: &CorrelationField) -> Result<()> {
    let dim = field.points.first().map(|p| p.len()).unwrap_or(1);
    let rows: Vec<Vec<String>> = field
        .points
        .iter()
        .zip(&field.values)
        .map(|(p, &v)| p.iter().map(|&c| fmt(c)).chain(std::iter::once(fmt(v))).collect())
        .collect();
    write_csv(path, &field_header(dim), &rows)
}

pub fn write_solver_trace(path: &Path, report: &SolverReport) -> Result<()> {
    let rows: Vec<Vec<String>> = report
        .objective
        .iter()
        .enumerate()
        .map(|(k, &f)| {
            vec![
                k.to_string(),
                fmt(f),
                report.rel_error.get(k).map(|&e| fmt(e)).unwrap_or_default(),
            ]
        })
        .collect();
    write_csv(path, SOLVER_TRACE_HEADER, &rows)
}
