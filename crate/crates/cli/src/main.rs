use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use etppc_core::analysis::{analyze_trace, derive_constants, AnalysisReport};
use etppc_core::scenario::{load_scenario, Scenario, ScenarioError};
use etppc_core::sim::{run, Trace};
use etppc_core::sweep::{run_sweep, write_table, SweepAxis, SweepOptions};
use etppc_core::trace_io::{
    read_events, read_trace, write_events, write_json, write_plot_data, write_summary, write_trace,
};

const EXIT_PARSE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_NUMERIC: u8 = 4;
const EXIT_CHECK: u8 = 5;

#[derive(Parser)]
#[command(name = "etppc", version, about = "Event-triggered prescribed-performance attitude control simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Integration step override (s).
    #[arg(long)]
    dt: Option<f64>,
    /// Horizon override (s).
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Config override `section.key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Skip feasibility and trace checks.
    #[arg(long)]
    no_analysis: bool,
}

impl Common {
    fn overrides(&self) -> Vec<String> {
        let mut v = self.set.clone();
        if let Some(dt) = self.dt {
            v.push(format!("simulation.dt={dt:?}"));
        }
        if let Some(t) = self.t_end {
            v.push(format!("simulation.t_end={t:?}"));
        }
        v
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write trace, events, summary, analysis and plot data.
    Run(Common),
    /// Run the Cartesian product of parameter axes.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Axis `section.key=v1,v2,...`; repeatable.
        #[arg(long = "axis", value_name = "KEY=V1,V2,...")]
        axes: Vec<String>,
        /// Concurrent cells (defaults to all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Re-run every trace check on a stored trace.
    Analyze {
        /// Trace file written by `run`; `events.csv` is read from the same directory.
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn load(path: &Path, overrides: &[String]) -> Result<Scenario, ExitCode> {
    load_scenario(path, overrides).and_then(|c| c.resolve()).map_err(|e: ScenarioError| fail(EXIT_PARSE, e))
}

fn ensure_dir(dir: &Path) -> Result<(), ExitCode> {
    fs::create_dir_all(dir).map_err(|e| fail(EXIT_PARSE, format!("cannot create {}: {e}", dir.display())))
}

fn write_outputs(dir: &Path, trace: &Trace) -> Result<(), ExitCode> {
    let plots = dir.join("plots");
    ensure_dir(&plots)?;
    write_trace(&dir.join("trace.csv"), &trace.records, &trace.summary.config_hash)
        .and_then(|_| write_events(&dir.join("events.csv"), &trace.events))
        .and_then(|_| write_summary(&dir.join("summary.json"), &trace.summary))
        .and_then(|_| write_plot_data(&plots, &trace.records))
        .map_err(|e| fail(EXIT_NUMERIC, e))
}

fn print_report(rep: &AnalysisReport) {
    let verdict = |ok: bool| if ok { "pass" } else { "FAIL" };
    for env in [&rep.on_envelope, &rep.off_bound, &rep.layer1, &rep.v2_below_s2] {
        match &env.skipped {
            Some(why) => println!("{:<16} skipped ({why})", env.name),
            None => println!(
                "{:<16} {} ({} violations, max excess {:e})",
                env.name,
                verdict(env.passed()),
                env.violation_count,
                env.max_violation
            ),
        }
    }
    println!(
        "{:<16} {} ({} gaps, {} below bound)",
        "miet",
        verdict(rep.miet.passed()),
        rep.miet.gaps.len(),
        rep.miet.failures
    );
    if let Some(why) = &rep.a_priori_infeasible {
        println!("a-priori         {why}");
    }
}

fn cmd_run(c: Common) -> ExitCode {
    let sc = match load(&c.scenario, &c.overrides()) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if !c.no_analysis {
        if let Err(e) = derive_constants(&sc) {
            return fail(EXIT_INFEASIBLE, e);
        }
    }
    if let Err(code) = ensure_dir(&c.out) {
        return code;
    }
    let trace = match run(&sc) {
        Ok(t) => t,
        Err(f) => {
            let _ = write_outputs(&c.out, &f.trace);
            return fail(EXIT_NUMERIC, f.error);
        }
    };
    if let Err(code) = write_outputs(&c.out, &trace) {
        return code;
    }
    let s = &trace.summary;
    println!("config hash      {}", s.config_hash);
    match s.settling_time {
        Some(t) => println!("settling time    {t:.3} s"),
        None => println!("settling time    not settled"),
    }
    println!("terminal error   {:.5} deg", s.terminal_error_deg);
    println!("max |omega|      {:.6} rad/s", s.max_omega_norm);
    println!("events           {} on, {} off (act), {} off (pas)", s.turn_on_events, s.turn_off_act, s.turn_off_pas);
    println!("actuation rate   {:.3} Hz, on fraction {:.3}", s.actuation_rate_hz, s.on_fraction);
    if c.no_analysis {
        return ExitCode::SUCCESS;
    }
    let rep = match analyze_trace(&sc, &trace.records, &trace.events) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_CHECK, e),
    };
    if let Err(e) = write_json(&c.out.join("analysis.json"), &rep) {
        return fail(EXIT_NUMERIC, e);
    }
    print_report(&rep);
    if rep.all_passed() {
        ExitCode::SUCCESS
    } else {
        fail(EXIT_CHECK, "one or more trace checks failed")
    }
}

fn cmd_sweep(c: Common, axes: Vec<String>, workers: Option<usize>) -> ExitCode {
    if axes.is_empty() {
        return fail(EXIT_PARSE, "sweep needs at least one --axis");
    }
    let mut parsed = Vec::with_capacity(axes.len());
    for a in &axes {
        match SweepAxis::parse(a) {
            Some(ax) => parsed.push(ax),
            None => return fail(EXIT_PARSE, format!("malformed axis {a:?}")),
        }
    }
    let base = match fs::read_to_string(&c.scenario) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_PARSE, format!("cannot read scenario {}: {e}", c.scenario.display())),
    };
    let common = c.overrides();
    // Axis keys must name existing fields: validate each axis's first value up front.
    for ax in &parsed {
        let mut probe = common.clone();
        probe.push(format!("{}={}", ax.key, ax.values[0]));
        if let Err(e) = etppc_core::scenario::parse_scenario(&base, &probe) {
            return fail(EXIT_PARSE, e);
        }
    }
    if let Err(code) = ensure_dir(&c.out) {
        return code;
    }
    let opts = SweepOptions { analyze: !c.no_analysis, out_dir: Some(c.out.clone()) };
    let cells = run_sweep(&base, &common, &parsed, &opts, workers);
    if let Err(e) = write_table(&c.out.join("sweep.csv"), &cells) {
        return fail(EXIT_NUMERIC, e);
    }
    for cell in &cells {
        let s = cell.summary.as_ref();
        println!(
            "{:>4}  {:<40} settle={:<10} max|w|={:<10} on={:<4} {}",
            cell.index,
            cell.overrides.join(" "),
            s.and_then(|s| s.settling_time).map_or("-".into(), |t| format!("{t:.3}")),
            s.map_or("-".into(), |s| format!("{:.6}", s.max_omega_norm)),
            s.map_or("-".into(), |s| s.turn_on_events.to_string()),
            cell.error.as_deref().unwrap_or("")
        );
    }
    println!("{} cells written to {}", cells.len(), c.out.join("sweep.csv").display());
    ExitCode::SUCCESS
}

fn cmd_analyze(trace_path: PathBuf, scenario: PathBuf, set: Vec<String>) -> ExitCode {
    let sc = match load(&scenario, &set) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let stored = match read_trace(&trace_path) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    if stored.config_hash != sc.hash {
        return fail(EXIT_PARSE, format!("config hash mismatch: trace {} vs scenario {}", stored.config_hash, sc.hash));
    }
    let events_path = trace_path.with_file_name("events.csv");
    let events = match read_events(&events_path) {
        Ok(e) => e,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    match analyze_trace(&sc, &stored.records, &events) {
        Ok(rep) => {
            print_report(&rep);
            if rep.all_passed() {
                ExitCode::SUCCESS
            } else {
                fail(EXIT_CHECK, "one or more trace checks failed")
            }
        }
        Err(e) => fail(EXIT_CHECK, e),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_PARSE) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Run(c) => cmd_run(c),
        Command::Sweep { common, axes, workers } => cmd_sweep(common, axes, workers),
        Command::Analyze { trace, scenario, set } => cmd_analyze(trace, scenario, set),
    }
}
