//! Cartesian parameter sweeps over scenario overrides. Cells are independent
//! and run on the rayon pool when the `parallel` feature is enabled.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

use std::path::{Path, PathBuf};

use crate::analysis::{analyze_trace, derive_constants};
use crate::scenario::{parse_scenario, ScenarioConfig};
use crate::sim::{run, Summary, Trace};
use crate::trace_io::{write_events, write_json, write_summary, write_trace, TraceIoError};

/// One swept parameter: a dotted scenario key and the values it takes.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<String>,
}

impl SweepAxis {
    /// Parses `key=v1,v2,...`.
    pub fn parse(spec: &str) -> Option<Self> {
        let (key, vals) = spec.split_once('=')?;
        let values: Vec<String> = vals.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if key.trim().is_empty() || values.is_empty() {
            return None;
        }
        Some(Self { key: key.trim().to_string(), values })
    }
}

/// Every combination of axis values as lists of `key=value` overrides, in
/// row-major order (last axis varies fastest).
pub fn cartesian(axes: &[SweepAxis]) -> Vec<Vec<String>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(format!("{}={}", axis.key, v));
                    p
                })
            })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellOutcome {
    pub index: usize,
    pub overrides: Vec<String>,
    /// `None` when the cell failed before producing a summary.
    pub summary: Option<Summary>,
    pub feasible: Option<String>,
    pub envelopes_passed: Option<bool>,
    pub error: Option<String>,
}

/// How each cell is run and where its artifacts go.
#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    pub analyze: bool,
    /// Each cell writes into its own `cell_NNNN` subdirectory when set.
    pub out_dir: Option<PathBuf>,
}

fn write_cell(dir: &Path, trace: &Trace) -> Result<(), TraceIoError> {
    std::fs::create_dir_all(dir).map_err(|source| TraceIoError::Io { path: dir.display().to_string(), source })?;
    write_trace(&dir.join("trace.csv"), &trace.records, &trace.summary.config_hash)?;
    write_events(&dir.join("events.csv"), &trace.events)?;
    write_summary(&dir.join("summary.json"), &trace.summary)
}

/// Output subdirectory of one cell.
pub fn cell_dir(root: &Path, index: usize) -> PathBuf {
    root.join(format!("cell_{index:04}"))
}

/// Builds, simulates and (optionally) analyzes one cell.
pub fn run_cell(
    index: usize,
    base: &str,
    common: &[String],
    overrides: Vec<String>,
    opts: &SweepOptions,
) -> CellOutcome {
    let mut all = common.to_vec();
    all.extend(overrides.iter().cloned());
    let fail = |error: String, summary: Option<Summary>| CellOutcome {
        index,
        overrides: overrides.clone(),
        summary,
        feasible: None,
        envelopes_passed: None,
        error: Some(error),
    };
    let sc = match parse_scenario(base, &all).and_then(ScenarioConfig::resolve) {
        Ok(sc) => sc,
        Err(e) => return fail(e.to_string(), None),
    };
    let feasible = match derive_constants(&sc) {
        Ok(_) => "ok".to_string(),
        Err(e) => e.to_string(),
    };
    let dir = opts.out_dir.as_deref().map(|root| cell_dir(root, index));
    let trace = match run(&sc) {
        Ok(t) => t,
        Err(f) => {
            if let Some(d) = &dir {
                let _ = write_cell(d, &f.trace);
            }
            let mut out = fail(f.error.to_string(), Some(f.trace.summary));
            out.feasible = Some(feasible);
            return out;
        }
    };
    if let Some(d) = &dir {
        if let Err(e) = write_cell(d, &trace) {
            return fail(e.to_string(), Some(trace.summary));
        }
    }
    let envelopes_passed = if opts.analyze {
        match analyze_trace(&sc, &trace.records, &trace.events) {
            Ok(rep) => {
                if let Some(d) = &dir {
                    if let Err(e) = write_json(&d.join("analysis.json"), &rep) {
                        return fail(e.to_string(), Some(trace.summary));
                    }
                }
                Some(rep.all_passed())
            }
            Err(e) => return fail(e.to_string(), Some(trace.summary)),
        }
    } else {
        None
    };
    CellOutcome {
        index,
        overrides,
        summary: Some(trace.summary),
        feasible: Some(feasible),
        envelopes_passed,
        error: None,
    }
}

/// Runs every cell of the sweep on up to `workers` threads (all cores when
/// `None`). Results come back in cell order regardless of execution order.
pub fn run_sweep(
    base: &str,
    common: &[String],
    axes: &[SweepAxis],
    opts: &SweepOptions,
    workers: Option<usize>,
) -> Vec<CellOutcome> {
    let cells: Vec<(usize, Vec<String>)> = cartesian(axes).into_iter().enumerate().collect();
    map_cells(cells, workers, |(i, ov)| run_cell(i, base, common, ov, opts))
}

/// Order-preserving map over independent work items.
#[cfg(feature = "parallel")]
pub fn map_cells<T: Send, R: Send>(items: Vec<T>, workers: Option<usize>, f: impl Fn(T) -> R + Sync + Send) -> Vec<R> {
    let work = || items.into_par_iter().map(&f).collect();
    match workers {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(work),
            Err(_) => work(),
        },
        None => work(),
    }
}

/// Order-preserving map over independent work items.
#[cfg(not(feature = "parallel"))]
pub fn map_cells<T: Send, R: Send>(items: Vec<T>, _workers: Option<usize>, f: impl Fn(T) -> R + Sync + Send) -> Vec<R> {
    items.into_iter().map(f).collect()
}

/// Sequential reference path, always available for comparison with [`run_sweep`].
pub fn run_sweep_sequential(
    base: &str,
    common: &[String],
    axes: &[SweepAxis],
    opts: &SweepOptions,
) -> Vec<CellOutcome> {
    cartesian(axes).into_iter().enumerate().map(|(i, ov)| run_cell(i, base, common, ov, opts)).collect()
}

/// Column order of the sweep results table.
pub const TABLE_HEADER: [&str; 14] = [
    "cell",
    "overrides",
    "completed",
    "settling_time",
    "terminal_error_deg",
    "max_omega_norm",
    "turn_on_events",
    "turn_off_act",
    "turn_off_pas",
    "actuation_rate_hz",
    "on_fraction",
    "feasibility",
    "envelopes_passed",
    "error",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes one row per cell.
pub fn write_table(path: &Path, cells: &[CellOutcome]) -> Result<(), TraceIoError> {
    let csv_err = |source| TraceIoError::Csv { path: path.display().to_string(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(TABLE_HEADER).map_err(csv_err)?;
    for c in cells {
        let s = c.summary.as_ref();
        w.write_record([
            c.index.to_string(),
            c.overrides.join(" "),
            opt(s.map(|s| s.completed)),
            opt(s.and_then(|s| s.settling_time)),
            opt(s.map(|s| s.terminal_error_deg)),
            opt(s.map(|s| s.max_omega_norm)),
            opt(s.map(|s| s.turn_on_events)),
            opt(s.map(|s| s.turn_off_act)),
            opt(s.map(|s| s.turn_off_pas)),
            opt(s.map(|s| s.actuation_rate_hz)),
            opt(s.map(|s| s.on_fraction)),
            c.feasible.clone().unwrap_or_default(),
            opt(c.envelopes_passed),
            c.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| TraceIoError::Io { path: path.display().to_string(), source })
}
