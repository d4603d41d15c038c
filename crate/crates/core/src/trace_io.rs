//! Trace, event-log, summary and per-figure column exports, plus the trace
//! reader used by offline analysis.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::math::{UnitQuaternion, Vec3};
use crate::sim::{Summary, TraceRecord};
use crate::trigger::{Mode, Reason, TriggerEvent};

#[derive(Debug, Error)]
pub enum TraceIoError {
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("csv error on {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path} row {row}: {reason}")]
    Malformed { path: String, row: usize, reason: String },
}

/// Column order of the trace file, matching [`TraceRecord`].
pub const TRACE_HEADER: [&str; 35] = [
    "t",
    "qe_x",
    "qe_y",
    "qe_z",
    "qe_w",
    "omega_x",
    "omega_y",
    "omega_z",
    "omega_norm",
    "u_cmd_x",
    "u_cmd_y",
    "u_cmd_z",
    "u_act_x",
    "u_act_y",
    "u_act_z",
    "e_u_x",
    "e_u_y",
    "e_u_z",
    "mode",
    "rho_x",
    "rho_y",
    "rho_z",
    "eps_x",
    "eps_y",
    "eps_z",
    "alpha_x",
    "alpha_y",
    "alpha_z",
    "v1",
    "v2",
    "s2",
    "sat_x",
    "sat_y",
    "sat_z",
    "config_hash",
];

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> TraceIoError + '_ {
    move |source| TraceIoError::Csv { path: path.display().to_string(), source }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> TraceIoError + '_ {
    move |source| TraceIoError::Io { path: path.display().to_string(), source }
}

fn push_vec(row: &mut Vec<String>, v: Vec3) {
    row.extend(v.to_array().iter().map(|x| x.to_string()));
}

/// Floats use Rust's shortest round-trip formatting, so reading a trace back is lossless.
fn trace_row(r: &TraceRecord, hash: &str) -> Vec<String> {
    let mut row = Vec::with_capacity(TRACE_HEADER.len());
    row.push(r.t.to_string());
    row.extend(r.q_e.to_array().iter().map(|x| x.to_string()));
    push_vec(&mut row, r.omega);
    row.push(r.omega_norm.to_string());
    push_vec(&mut row, r.u_cmd);
    push_vec(&mut row, r.u_act);
    push_vec(&mut row, r.e_u);
    row.push(r.mode.to_string());
    push_vec(&mut row, r.rho);
    push_vec(&mut row, r.eps);
    push_vec(&mut row, r.alpha);
    row.push(r.v1.to_string());
    row.push(r.v2.to_string());
    row.push(r.s2.to_string());
    row.extend(r.saturated.iter().map(|&s| u8::from(s).to_string()));
    row.push(hash.to_string());
    row
}

pub fn write_trace(path: &Path, records: &[TraceRecord], config_hash: &str) -> Result<(), TraceIoError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(TRACE_HEADER).map_err(csv_err(path))?;
    for r in records {
        w.write_record(trace_row(r, config_hash)).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// A trace read back from disk together with the config hash stamped on its rows.
#[derive(Debug, Clone)]
pub struct StoredTrace {
    pub records: Vec<TraceRecord>,
    pub config_hash: String,
}

pub fn read_trace(path: &Path) -> Result<StoredTrace, TraceIoError> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let malformed =
        |row: usize, reason: String| TraceIoError::Malformed { path: path.display().to_string(), row, reason };
    let header = rd.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(malformed(0, "unexpected header".into()));
    }
    let mut records = Vec::new();
    let mut config_hash: Option<String> = None;
    for (i, row) in rd.records().enumerate() {
        let row = row.map_err(csv_err(path))?;
        let n = i + 1;
        let f = |k: usize| -> Result<f64, TraceIoError> {
            row[k].parse::<f64>().map_err(|e| malformed(n, format!("column {}: {e}", TRACE_HEADER[k])))
        };
        let v = |k: usize| -> Result<Vec3, TraceIoError> { Ok(Vec3::new(f(k)?, f(k + 1)?, f(k + 2)?)) };
        let flag = |k: usize| -> Result<bool, TraceIoError> {
            match &row[k] {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(malformed(n, format!("column {}: bad flag {other:?}", TRACE_HEADER[k]))),
            }
        };
        let mode = match &row[18] {
            "ON" => Mode::On,
            "OFF" => Mode::Off,
            other => return Err(malformed(n, format!("bad mode {other:?}"))),
        };
        let hash = &row[34];
        match &config_hash {
            None => config_hash = Some(hash.to_string()),
            Some(h) if h != hash => return Err(malformed(n, "config hash changes within the trace".into())),
            _ => {}
        }
        records.push(TraceRecord {
            t: f(0)?,
            q_e: UnitQuaternion::from_raw(v(1)?, f(4)?),
            omega: v(5)?,
            omega_norm: f(8)?,
            u_cmd: v(9)?,
            u_act: v(12)?,
            e_u: v(15)?,
            mode,
            rho: v(19)?,
            eps: v(22)?,
            alpha: v(25)?,
            v1: f(28)?,
            v2: f(29)?,
            s2: f(30)?,
            saturated: [flag(31)?, flag(32)?, flag(33)?],
        });
    }
    Ok(StoredTrace { records, config_hash: config_hash.unwrap_or_default() })
}

fn reason_str(r: Reason) -> &'static str {
    match r {
        Reason::Init => "INIT",
        Reason::Act => "ACT",
        Reason::Pas => "PAS",
        Reason::Envelope => "ENVELOPE",
    }
}

pub fn write_events(path: &Path, events: &[TriggerEvent]) -> Result<(), TraceIoError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["t", "mode", "reason"]).map_err(csv_err(path))?;
    for e in events {
        w.write_record([e.t.to_string(), e.mode.to_string(), reason_str(e.reason).to_string()])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_events(path: &Path) -> Result<Vec<TriggerEvent>, TraceIoError> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row.map_err(csv_err(path))?;
        let bad = |reason: String| TraceIoError::Malformed { path: path.display().to_string(), row: i + 1, reason };
        let t = row[0].parse::<f64>().map_err(|e| bad(e.to_string()))?;
        let mode = match &row[1] {
            "ON" => Mode::On,
            "OFF" => Mode::Off,
            other => return Err(bad(format!("bad mode {other:?}"))),
        };
        let reason = match &row[2] {
            "INIT" => Reason::Init,
            "ACT" => Reason::Act,
            "PAS" => Reason::Pas,
            "ENVELOPE" => Reason::Envelope,
            other => return Err(bad(format!("bad reason {other:?}"))),
        };
        out.push(TriggerEvent { t, mode, reason });
    }
    Ok(out)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), TraceIoError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<(), TraceIoError> {
    write_json(path, summary)
}

type Column = (&'static str, fn(&TraceRecord) -> f64);

/// Per-figure column sets: attitude error, angular rate, rate norm, actuator
/// output, and `V₂` against `S₂`.
pub const FIGURES: [(&str, &[Column]); 5] = [
    (
        "fig1_attitude_error.csv",
        &[
            ("qe_x", |r| r.q_e.v.x),
            ("qe_y", |r| r.q_e.v.y),
            ("qe_z", |r| r.q_e.v.z),
            ("rho_x", |r| r.rho.x),
            ("rho_y", |r| r.rho.y),
            ("rho_z", |r| r.rho.z),
        ],
    ),
    ("fig2_angular_rate.csv", &[("omega_x", |r| r.omega.x), ("omega_y", |r| r.omega.y), ("omega_z", |r| r.omega.z)]),
    ("fig3_angular_rate_norm.csv", &[("omega_norm", |r| r.omega_norm)]),
    ("fig4_actuator.csv", &[("u_act_x", |r| r.u_act.x), ("u_act_y", |r| r.u_act.y), ("u_act_z", |r| r.u_act.z)]),
    ("fig5_v2_s2.csv", &[("v2", |r| r.v2), ("s2", |r| r.s2)]),
];

/// Writes one column file per figure into `dir`.
pub fn write_plot_data(dir: &Path, records: &[TraceRecord]) -> Result<(), TraceIoError> {
    for (name, cols) in FIGURES {
        let path = dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
        let header: Vec<&str> = std::iter::once("t").chain(cols.iter().map(|c| c.0)).collect();
        w.write_record(&header).map_err(csv_err(&path))?;
        for r in records {
            let row: Vec<String> =
                std::iter::once(r.t.to_string()).chain(cols.iter().map(|c| c.1(r).to_string())).collect();
            w.write_record(&row).map_err(csv_err(&path))?;
        }
        w.flush().map_err(io_err(&path))?;
    }
    Ok(())
}
