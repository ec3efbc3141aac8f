//! CSV plot data: traces, alarm events, Monte Carlo summaries and raw matrices.
//!
//! Headers are fixed so downstream plotting scripts can rely on them:
//!
//! * `trace.csv`: `k,t,i_od,i_oq,i_od_tilde,i_oq_tilde,d1,d2,f,r,J,J_th,alarm`
//! * `events.csv`: `k,kind,J`
//! * `montecarlo.csv`: `lambda,J_th,rate,bound,slack,samples`

use std::path::Path;

use crate::detect::AlarmEvent;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::simulate::Trace;

pub const TRACE_HEADER: [&str; 13] =
    ["k", "t", "i_od", "i_oq", "i_od_tilde", "i_oq_tilde", "d1", "d2", "f", "r", "J", "J_th", "alarm"];
pub const EVENTS_HEADER: [&str; 3] = ["k", "kind", "J"];
pub const MONTECARLO_HEADER: [&str; 6] = ["lambda", "J_th", "rate", "bound", "slack", "samples"];

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Artifact(format!("csv: {other:?}")),
    }
}

pub fn write_matrix_csv(path: &Path, m: &Mat) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Write `trace.csv`. Currents are divided by `current_base` when given (per-unit export).
/// A trace with one disturbance channel leaves `d2` at zero; `r`, `J`, `J_th` are zero and
/// `alarm` is 0 when no detector has been run.
pub fn write_trace_csv(path: &Path, trace: &Trace, current_base: Option<f64>) -> Result<()> {
    let base = current_base.unwrap_or(1.0);
    if !(base.is_finite() && base > 0.0) {
        return Err(Error::InvalidParameter { field: "current_base", reason: format!("must be > 0, got {base}") });
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    let det = trace.detection.as_ref();
    for k in 0..trace.len() {
        let d = trace.d_at(k);
        let (r, j, j_th, alarm) = match det {
            Some(o) => (o.r[k], o.j[k], o.j_th, o.alarm[k]),
            None => (0.0, 0.0, 0.0, false),
        };
        let row = [
            k.to_string(),
            trace.time(k).to_string(),
            (trace.y[k][0] / base).to_string(),
            (trace.y[k][1] / base).to_string(),
            (trace.y_tilde[k][0] / base).to_string(),
            (trace.y_tilde[k][1] / base).to_string(),
            d.first().copied().unwrap_or(0.0).to_string(),
            d.get(1).copied().unwrap_or(0.0).to_string(),
            u8::from(trace.f[k]).to_string(),
            r.to_string(),
            j.to_string(),
            j_th.to_string(),
            u8::from(alarm).to_string(),
        ];
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_events_csv(path: &Path, events: &[AlarmEvent]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(EVENTS_HEADER).map_err(csv_err)?;
    for e in events {
        w.write_record([e.k.to_string(), e.kind.as_str().to_string(), e.j.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One parsed row of `trace.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub y_tilde: [f64; 2],
    pub f: bool,
    pub j: f64,
    pub alarm: bool,
}

/// Read back the columns a detector replay needs.
pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(Error::Artifact(format!("unexpected trace header: {header:?}")));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Artifact(format!("bad number `{s}`: {e}")));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        rows.push(TraceRow {
            k: rec[0].parse().map_err(|e| Error::Artifact(format!("bad step index: {e}")))?,
            y_tilde: [num(&rec[4])?, num(&rec[5])?],
            f: &rec[8] == "1",
            j: num(&rec[10])?,
            alarm: &rec[12] == "1",
        });
    }
    Ok(rows)
}

/// Summary line of a Monte Carlo false-alarm study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub lambda: f64,
    pub j_th: f64,
    pub rate: f64,
    /// Markov bound `1 / lambda`.
    pub bound: f64,
    /// Finite-sample binomial slack `3 sqrt(p (1 - p) / samples)` with `p = 1 / lambda`.
    pub slack: f64,
    pub samples: usize,
}

pub fn write_montecarlo_csv(path: &Path, rows: &[RateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(MONTECARLO_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.lambda.to_string(),
            r.j_th.to_string(),
            r.rate.to_string(),
            r.bound.to_string(),
            r.slack.to_string(),
            r.samples.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
