//! Batch front end for the autopilot library.
//!
//! Exit codes: 0 ok, 1 configuration error, 2 synthesis error, 3 simulation
//! abort, 4 acceptance failure.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use depthpilot::l1aug::{build_desired_model, check_l1_condition, BenchmarkGap, L1Constants};
use depthpilot::sim::{closed_loop_abstraction, compute_metrics, read_csv, run_with, synthesize, write_csv, Metrics};
use depthpilot::Error;
use nalgebra::DMatrix;

pub use config::{parse_config, ConditionSettings, ConfigError, RunConfig, SCENARIO_1, SCENARIO_2};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SYNTHESIS: i32 = 2;
pub const EXIT_ABORT: i32 = 3;
pub const EXIT_ACCEPTANCE: i32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self::config(format!("{}: {e}", path.display()))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

/// Validation and argument problems are configuration errors; anything the
/// synthesis chain rejects is a synthesis error.
fn classify(e: Error) -> CliError {
    let code = match e {
        Error::InvalidArgument(_) | Error::UnsupportedSpeed(_) | Error::Dimension(_) => EXIT_CONFIG,
        _ => EXIT_SYNTHESIS,
    };
    CliError { code, message: e.to_string() }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Text of `design.txt`.
pub fn design_report(cfg: &RunConfig) -> Result<String, CliError> {
    let s = &cfg.scenario;
    s.validate().map_err(classify)?;
    let syn = synthesize(s).map_err(classify)?;
    let mut out = String::new();
    let _ = writeln!(out, "[scenario]");
    let _ = writeln!(out, "speed = {}", s.speed);
    let _ = writeln!(out, "case = {}", s.case.number());
    let _ = writeln!(out, "wave_omega = {}", s.wave_omega());
    out.push_str(&syn.lqr.report());
    if let Some((lz, lt)) = &syn.l1 {
        for (channel, (name, aug, tf)) in
            [("z", lz, &s.desired_z), ("theta", lt, &s.desired_theta)].into_iter().enumerate()
        {
            let _ = writeln!(out, "[l1.{name}]");
            let _ = writeln!(out, "sample_time = {}", aug.ts());
            let _ = writeln!(out, "desired_dc_gain = {}", aug.model.dc_gain());
            let _ = writeln!(out, "adaptation_gain = {}", fmt_row(aug.adaptation.gain.iter()));
            let _ = writeln!(out, "o_states = {}", aug.o.n_states());
            let plant = closed_loop_abstraction(&syn.lqr, channel);
            let nz = plant.a_z.nrows();
            let k = match &cfg.condition.k {
                None => DMatrix::zeros(1, nz),
                Some(k) if k.len() == nz => DMatrix::from_row_slice(1, nz, k),
                Some(k) => {
                    return Err(CliError::config(format!(
                        "l1.condition.k has {} entries; the loop abstraction has {nz} states",
                        k.len()
                    )))
                }
            };
            let constants = constants(&cfg.condition, k);
            let model = build_desired_model(tf).map_err(classify)?;
            let report = check_l1_condition(&plant, &model, &s.c_filter, &constants).map_err(classify)?;
            let _ = writeln!(out, "[l1.{name}.condition]");
            out.push_str(&report.to_text());
        }
    }
    Ok(out)
}

fn constants(c: &ConditionSettings, k: DMatrix<f64>) -> L1Constants {
    L1Constants { rho0: c.rho0, rho_r: c.rho_r, f_delta: c.f_delta.clone(), l0: c.l0, m_r: c.m_r, gamma0: c.gamma0, k }
}

fn fmt_row<'a>(v: impl Iterator<Item = &'a f64>) -> String {
    v.map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ")
}

/// Writes `design.txt` and `effective.cfg` into `out`.
pub fn cmd_design(cfg: &RunConfig, out: &Path) -> Result<PathBuf, CliError> {
    let report = design_report(cfg)?;
    ensure_dir(out)?;
    write_file(&out.join("effective.cfg"), cfg.to_text())?;
    let path = out.join("design.txt");
    write_file(&path, report)?;
    Ok(path)
}

/// Outputs of a completed run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace_path: PathBuf,
    pub metrics: Metrics,
}

/// Writes `trace.csv`, `metrics.txt` and `effective.cfg` into `out`. An
/// aborted run still writes its partial trace and returns exit code 3.
pub fn cmd_run(cfg: &RunConfig, out: &Path) -> Result<RunOutput, CliError> {
    let s = &cfg.scenario;
    s.validate().map_err(classify)?;
    let syn = synthesize(s).map_err(classify)?;
    let trace = run_with(s, syn);
    ensure_dir(out)?;
    write_file(&out.join("effective.cfg"), cfg.to_text())?;
    let trace_path = out.join("trace.csv");
    let mut buf = Vec::new();
    write_csv(&trace, &mut buf).map_err(classify)?;
    write_file(&trace_path, buf)?;
    if let Some(reason) = &trace.aborted {
        return Err(CliError { code: EXIT_ABORT, message: format!("simulation aborted: {reason}") });
    }
    let metrics = compute_metrics(&trace, s.wave_omega(), &s.profile()).map_err(classify)?;
    write_file(&out.join("metrics.txt"), metrics.to_text())?;
    Ok(RunOutput { trace_path, metrics })
}

/// Recomputes metrics from a trace written by `run`.
pub fn cmd_metrics(cfg: &RunConfig, trace: &Path, out: &Path) -> Result<Metrics, CliError> {
    let file = fs::File::open(trace).map_err(|e| CliError::io(trace, e))?;
    let tr = read_csv(file).map_err(classify)?;
    let s = &cfg.scenario;
    let metrics = compute_metrics(&tr, s.wave_omega(), &s.profile()).map_err(classify)?;
    ensure_dir(out)?;
    write_file(&out.join("metrics.txt"), metrics.to_text())?;
    Ok(metrics)
}

/// Positive and strictly descending.
pub fn validate_ts_list(ts: &[f64]) -> Result<(), CliError> {
    if ts.is_empty() {
        return Err(CliError::config("sample-time list is empty"));
    }
    if let Some(bad) = ts.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(CliError::config(format!("sample time {bad} must be positive")));
    }
    if let Some(w) = ts.windows(2).find(|w| !(w[1] < w[0])) {
        return Err(CliError::config(format!(
            "sample times must be strictly descending ({} is followed by {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

pub fn sweep_table(gaps: &[BenchmarkGap]) -> String {
    let mut s = String::from("ts,gamma_x,gamma_u\n");
    for g in gaps {
        let _ = writeln!(s, "{},{},{}", g.ts, g.gamma_x, g.gamma_u);
    }
    s
}

/// Index of the first sample time whose state gap exceeds the previous one.
pub fn trend_violation(gaps: &[BenchmarkGap]) -> Option<usize> {
    gaps.windows(2).position(|w| w[1].gamma_x > w[0].gamma_x).map(|i| i + 1)
}

/// Runs the benchmark at every sample time in parallel, writes `sweep.csv`,
/// and fails with exit code 4 if the gap grows as the sample time shrinks.
pub fn cmd_sweep_ts(cfg: &RunConfig, ts: &[f64], out: &Path) -> Result<Vec<BenchmarkGap>, CliError> {
    validate_ts_list(ts)?;
    let bench = &cfg.benchmark;
    let reference = bench.reference().map_err(classify)?;
    let gaps: Vec<BenchmarkGap> = std::thread::scope(|scope| {
        let handles: Vec<_> = ts
            .iter()
            .map(|&t| {
                let reference = &reference;
                scope.spawn(move || bench.gap(reference, t))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect::<Result<_, _>>()
    })
    .map_err(classify)?;
    ensure_dir(out)?;
    write_file(&out.join("effective.cfg"), cfg.to_text())?;
    write_file(&out.join("sweep.csv"), sweep_table(&gaps))?;
    if let Some(i) = trend_violation(&gaps) {
        return Err(CliError {
            code: EXIT_ACCEPTANCE,
            message: format!(
                "gap grows from {:e} at T_s = {} to {:e} at T_s = {}",
                gaps[i - 1].gamma_x,
                gaps[i - 1].ts,
                gaps[i].gamma_x,
                gaps[i].ts
            ),
        });
    }
    Ok(gaps)
}

#[derive(Debug, Parser)]
#[command(name = "depthpilot", about = "Depth and pitch autopilot synthesis and simulation")]
pub struct Cli {
    /// Configuration file; defaults to the bundled scenario for --speed.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Controller case (overrides the configuration).
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..=3))]
    pub case: Option<u32>,
    /// Vehicle speed in m/s (overrides the configuration).
    #[arg(long, global = true)]
    pub speed: Option<f64>,
    /// Reserved. The simulation has no random inputs, so this is always rejected.
    #[arg(long, global = true)]
    pub seedless: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize the controllers and write design.txt.
    Design,
    /// Simulate the scenario and write trace.csv and metrics.txt.
    Run,
    /// Sample-time sweep on the synthetic benchmark; writes sweep.csv.
    SweepTs {
        /// Comma-separated, strictly descending sample times (default: sweep.ts).
        #[arg(long)]
        ts: Option<String>,
    },
    /// Recompute metrics.txt from an existing trace.
    Metrics {
        /// Trace CSV written by `run`.
        #[arg(long)]
        trace: PathBuf,
    },
}

/// Loads the configuration named by the flags and applies the overrides.
pub fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let (name, text) = match &cli.config {
        Some(p) => (p.display().to_string(), fs::read_to_string(p).map_err(|e| CliError::io(p, e))?),
        None if cli.speed == Some(5.0) => ("scenario-2".to_string(), SCENARIO_2.to_string()),
        None => ("scenario-1".to_string(), SCENARIO_1.to_string()),
    };
    let mut cfg = parse_config(&text).map_err(|e| CliError::config(format!("{name}: {e}")))?;
    if let Some(speed) = cli.speed {
        cfg.scenario.speed = speed;
    }
    if let Some(case) = cli.case {
        cfg.scenario.case = depthpilot::sim::ControllerCase::from_number(case).map_err(classify)?;
    }
    Ok(cfg)
}

fn parse_ts(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| CliError::config(format!("--ts: '{s}' is not a number"))))
        .collect()
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if cli.seedless {
        return Err(CliError::config("--seedless is reserved: runs are deterministic and use no random numbers"));
    }
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Design => {
            let path = cmd_design(&cfg, &cli.out)?;
            println!("wrote {}", path.display());
        }
        Command::Run => {
            let out = cmd_run(&cfg, &cli.out)?;
            println!("wrote {}", out.trace_path.display());
            print!("{}", out.metrics.to_text());
        }
        Command::SweepTs { ts } => {
            let list = match ts {
                Some(t) => parse_ts(t)?,
                None => cfg.sweep_ts.clone(),
            };
            let gaps = cmd_sweep_ts(&cfg, &list, &cli.out)?;
            print!("{}", sweep_table(&gaps));
        }
        Command::Metrics { trace } => {
            let m = cmd_metrics(&cfg, trace, &cli.out)?;
            print!("{}", m.to_text());
        }
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
