//! Flat `key = value` configuration with dotted section keys.
//!
//! Lines are `key = value`; `#` starts a comment and blank lines are ignored.
//! Lists take commas or whitespace. Matrices list rows separated by `;`, or
//! use `diag(a, b, ...)`. Every key is optional and falls back to the
//! documented default.

use std::collections::HashSet;
use std::fmt::Write as _;

use depthpilot::disturbance::WaveParams;
use depthpilot::l1aug::{FDelta, SampleTimeBenchmark};
use depthpilot::lti::TransferFunction;
use depthpilot::sim::{ControllerCase, ScenarioConfig};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub const SCENARIO_1: &str = include_str!("../config/scenario-1.cfg");
pub const SCENARIO_2: &str = include_str!("../config/scenario-2.cfg");

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }

    pub fn general(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }
}

/// Constants for the L1 small-gain report.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSettings {
    pub rho0: f64,
    pub rho_r: f64,
    pub f_delta: FDelta,
    pub l0: f64,
    pub m_r: f64,
    pub gamma0: f64,
    /// Row gain on the loop abstraction; zero when unset.
    pub k: Option<Vec<f64>>,
}

impl Default for ConditionSettings {
    fn default() -> Self {
        Self { rho0: 0.5, rho_r: 1e4, f_delta: FDelta::Constant(0.01), l0: 0.3, m_r: 50.0, gamma0: 1e-3, k: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub condition: ConditionSettings,
    pub sweep_ts: Vec<f64>,
    pub benchmark: SampleTimeBenchmark,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            condition: ConditionSettings::default(),
            sweep_ts: vec![0.4, 0.2, 0.1, 0.05],
            benchmark: SampleTimeBenchmark::default(),
        }
    }
}

fn num(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v.trim().parse().map_err(|_| ConfigError::at(line, format!("{key}: '{v}' is not a number")))?;
    if !x.is_finite() {
        return Err(ConfigError::at(line, format!("{key}: value must be finite")));
    }
    Ok(x)
}

fn list(line: usize, key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    let out: Vec<f64> = v
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| num(line, key, s))
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(ConfigError::at(line, format!("{key}: empty list")));
    }
    Ok(out)
}

fn boolean(line: usize, key: &str, v: &str) -> Result<bool, ConfigError> {
    match v.trim() {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(ConfigError::at(line, format!("{key}: '{v}' is not true/false"))),
    }
}

fn integer(line: usize, key: &str, v: &str) -> Result<usize, ConfigError> {
    v.trim().parse().map_err(|_| ConfigError::at(line, format!("{key}: '{v}' is not a non-negative integer")))
}

fn matrix(line: usize, key: &str, v: &str) -> Result<DMatrix<f64>, ConfigError> {
    let v = v.trim();
    if let Some(inner) = v.strip_prefix("diag(").and_then(|s| s.strip_suffix(')')) {
        return Ok(DMatrix::from_diagonal(&DVector::from_vec(list(line, key, inner)?)));
    }
    let rows: Vec<Vec<f64>> = v.split(';').map(|r| list(line, key, r)).collect::<Result<_, _>>()?;
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(ConfigError::at(line, format!("{key}: rows have different lengths")));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", ")
}

fn fmt_matrix(m: &DMatrix<f64>) -> String {
    m.row_iter().map(|r| r.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ")).collect::<Vec<_>>().join("; ")
}

/// Numerator/denominator halves of a transfer-function key, filled in after parsing.
#[derive(Default)]
struct TfParts {
    num: Option<(usize, Vec<f64>)>,
    den: Option<(usize, Vec<f64>)>,
}

impl TfParts {
    fn resolve(&self, name: &str, current: &TransferFunction) -> Result<TransferFunction, ConfigError> {
        if self.num.is_none() && self.den.is_none() {
            return Ok(current.clone());
        }
        let line = self.num.as_ref().or(self.den.as_ref()).map(|p| p.0).unwrap_or(0);
        let num = self.num.as_ref().map(|p| p.1.clone()).unwrap_or_else(|| current.num().to_vec());
        let den = self.den.as_ref().map(|p| p.1.clone()).unwrap_or_else(|| current.den().to_vec());
        TransferFunction::new(num, den).map_err(|e| ConfigError::at(line, format!("{name}: {e}")))
    }
}

fn f_delta_table(line: usize, key: &str, v: &str) -> Result<FDelta, ConfigError> {
    let mut rows = Vec::new();
    for pair in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (d, f) = pair
            .split_once(':')
            .ok_or_else(|| ConfigError::at(line, format!("{key}: expected 'delta:F' pairs, got '{pair}'")))?;
        rows.push((num(line, key, d)?, num(line, key, f)?));
    }
    if rows.is_empty() {
        return Err(ConfigError::at(line, format!("{key}: empty table")));
    }
    Ok(FDelta::Table(rows))
}

/// Applies `text` on top of the defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut c = RunConfig::default();
    let mut seen = HashSet::new();
    let mut decay_set = false;
    let (mut mz, mut mt, mut cf) = (TfParts::default(), TfParts::default(), TfParts::default());

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line, format!("expected 'key = value', got '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::at(line, format!("duplicate key '{key}'")));
        }
        let s = &mut c.scenario;
        let d = &mut s.disturbance;
        match key {
            "scenario.speed" => s.speed = num(line, key, value)?,
            "scenario.case" => {
                let n = integer(line, key, value)? as u32;
                s.case = ControllerCase::from_number(n).map_err(|e| ConfigError::at(line, e.to_string()))?;
            }
            "scenario.duration" => s.duration = num(line, key, value)?,
            "scenario.integrator_step" => s.integrator_step = num(line, key, value)?,
            "scenario.controller_sample" => s.controller_sample = num(line, key, value)?,
            "scenario.theta_cmd" => s.theta_cmd = num(line, key, value)?,
            "scenario.decimation" => s.decimation = integer(line, key, value)?,
            "profile.depths" => s.depths = list(line, key, value)?,
            "profile.dwells" => {
                s.dwells = if value == "equal" { None } else { Some(list(line, key, value)?) };
            }
            "disturbance.wave.enabled" => d.waves_enabled = boolean(line, key, value)?,
            "disturbance.wave.amplitude_v" => d.waves.amplitude_v = num(line, key, value)?,
            "disturbance.wave.amplitude_m" => d.waves.amplitude_m = num(line, key, value)?,
            "disturbance.wave.omega" => d.waves.omega = num(line, key, value)?,
            "disturbance.wave.phase" => d.waves.phase = num(line, key, value)?,
            "disturbance.wave.decay_wavenumber" => {
                if value != "deep" {
                    d.waves.decay_wavenumber = num(line, key, value)?;
                    decay_set = true;
                }
            }
            "disturbance.suction.enabled" => d.suction_enabled = boolean(line, key, value)?,
            "disturbance.suction.magnitude_v" => d.suction.magnitude_v = num(line, key, value)?,
            "disturbance.suction.magnitude_m" => d.suction.magnitude_m = num(line, key, value)?,
            "disturbance.suction.reference_depth" => d.suction.reference_depth = num(line, key, value)?,
            "disturbance.suction.decay_length" => d.suction.decay_length = num(line, key, value)?,
            "lqr.q" => s.q = matrix(line, key, value)?,
            "lqr.r" => s.r = matrix(line, key, value)?,
            "filtered.q1" => s.weights.q1 = matrix(line, key, value)?,
            "filtered.q2v" => s.weights.q2v = num(line, key, value)?,
            "filtered.q2m" => s.weights.q2m = num(line, key, value)?,
            "filtered.r" => s.weights.r = matrix(line, key, value)?,
            "filter.order" => s.filter.order = integer(line, key, value)?,
            "filter.notch_depth" => s.filter.notch_depth = num(line, key, value)?,
            "filter.relative_width" => s.filter.relative_width = num(line, key, value)?,
            "filter.center_omega" => {
                s.filter.center_omega = if value == "wave" { None } else { Some(num(line, key, value)?) };
            }
            "l1.desired_z.num" => mz.num = Some((line, list(line, key, value)?)),
            "l1.desired_z.den" => mz.den = Some((line, list(line, key, value)?)),
            "l1.desired_theta.num" => mt.num = Some((line, list(line, key, value)?)),
            "l1.desired_theta.den" => mt.den = Some((line, list(line, key, value)?)),
            "l1.c.num" => cf.num = Some((line, list(line, key, value)?)),
            "l1.c.den" => cf.den = Some((line, list(line, key, value)?)),
            "l1.lyapunov_weight" => {
                s.lyapunov_weight = if value == "identity" { None } else { Some(matrix(line, key, value)?) };
            }
            "saturation" => {
                s.saturation = if value == "none" {
                    None
                } else {
                    let v = list(line, key, value)?;
                    if v.len() != 2 {
                        return Err(ConfigError::at(line, "saturation: expected 'delta_v, delta_m' limits or none"));
                    }
                    Some([v[0], v[1]])
                };
            }
            "l1.condition.rho0" => c.condition.rho0 = num(line, key, value)?,
            "l1.condition.rho_r" => c.condition.rho_r = num(line, key, value)?,
            "l1.condition.f_delta" => c.condition.f_delta = FDelta::Constant(num(line, key, value)?),
            "l1.condition.f_delta_table" => c.condition.f_delta = f_delta_table(line, key, value)?,
            "l1.condition.l0" => c.condition.l0 = num(line, key, value)?,
            "l1.condition.m_r" => c.condition.m_r = num(line, key, value)?,
            "l1.condition.gamma0" => c.condition.gamma0 = num(line, key, value)?,
            "l1.condition.k" => {
                c.condition.k = if value == "zero" { None } else { Some(list(line, key, value)?) };
            }
            "sweep.ts" => c.sweep_ts = list(line, key, value)?,
            "benchmark.horizon" => c.benchmark.horizon = num(line, key, value)?,
            "benchmark.dt" => c.benchmark.dt = num(line, key, value)?,
            "benchmark.z_cmd" => c.benchmark.z_cmd = num(line, key, value)?,
            "benchmark.k" => c.benchmark.k = list(line, key, value)?,
            "benchmark.sin_amplitude" => c.benchmark.sin_amplitude = num(line, key, value)?,
            "benchmark.sin_omega" => c.benchmark.sin_omega = num(line, key, value)?,
            "benchmark.tanh_gain" => c.benchmark.tanh_gain = num(line, key, value)?,
            _ => return Err(ConfigError::at(line, format!("unknown key '{key}'"))),
        }
    }
    if seen.contains("l1.condition.f_delta") && seen.contains("l1.condition.f_delta_table") {
        return Err(ConfigError::general("give either l1.condition.f_delta or l1.condition.f_delta_table, not both"));
    }
    let s = &mut c.scenario;
    s.desired_z = mz.resolve("l1.desired_z", &s.desired_z)?;
    s.desired_theta = mt.resolve("l1.desired_theta", &s.desired_theta)?;
    s.c_filter = cf.resolve("l1.c", &s.c_filter)?;
    if !decay_set {
        s.disturbance.waves.decay_wavenumber = WaveParams::deep_water_wavenumber(s.disturbance.waves.omega);
    }
    c.benchmark.desired = s.desired_z.clone();
    c.benchmark.c_filter = s.c_filter.clone();
    Ok(c)
}

impl RunConfig {
    /// Fully resolved configuration; parsing it back gives an equal value.
    pub fn to_text(&self) -> String {
        let s = &self.scenario;
        let d = &s.disturbance;
        let mut o = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(o, "{k} = {v}");
        };
        kv("scenario.speed", format!("{}", s.speed));
        kv("scenario.case", format!("{}", s.case.number()));
        kv("scenario.duration", format!("{}", s.duration));
        kv("scenario.integrator_step", format!("{}", s.integrator_step));
        kv("scenario.controller_sample", format!("{}", s.controller_sample));
        kv("scenario.theta_cmd", format!("{}", s.theta_cmd));
        kv("scenario.decimation", format!("{}", s.decimation));
        kv("profile.depths", fmt_list(&s.depths));
        kv("profile.dwells", s.dwells.as_deref().map(fmt_list).unwrap_or_else(|| "equal".into()));
        kv("disturbance.wave.enabled", format!("{}", d.waves_enabled));
        kv("disturbance.wave.amplitude_v", format!("{}", d.waves.amplitude_v));
        kv("disturbance.wave.amplitude_m", format!("{}", d.waves.amplitude_m));
        kv("disturbance.wave.omega", format!("{}", d.waves.omega));
        kv("disturbance.wave.phase", format!("{}", d.waves.phase));
        kv("disturbance.wave.decay_wavenumber", format!("{}", d.waves.decay_wavenumber));
        kv("disturbance.suction.enabled", format!("{}", d.suction_enabled));
        kv("disturbance.suction.magnitude_v", format!("{}", d.suction.magnitude_v));
        kv("disturbance.suction.magnitude_m", format!("{}", d.suction.magnitude_m));
        kv("disturbance.suction.reference_depth", format!("{}", d.suction.reference_depth));
        kv("disturbance.suction.decay_length", format!("{}", d.suction.decay_length));
        kv("lqr.q", fmt_matrix(&s.q));
        kv("lqr.r", fmt_matrix(&s.r));
        kv("filtered.q1", fmt_matrix(&s.weights.q1));
        kv("filtered.q2v", format!("{}", s.weights.q2v));
        kv("filtered.q2m", format!("{}", s.weights.q2m));
        kv("filtered.r", fmt_matrix(&s.weights.r));
        kv("filter.order", format!("{}", s.filter.order));
        kv("filter.notch_depth", format!("{}", s.filter.notch_depth));
        kv("filter.relative_width", format!("{}", s.filter.relative_width));
        kv("filter.center_omega", s.filter.center_omega.map(|w| format!("{w}")).unwrap_or_else(|| "wave".into()));
        kv("l1.desired_z.num", fmt_list(s.desired_z.num()));
        kv("l1.desired_z.den", fmt_list(s.desired_z.den()));
        kv("l1.desired_theta.num", fmt_list(s.desired_theta.num()));
        kv("l1.desired_theta.den", fmt_list(s.desired_theta.den()));
        kv("l1.c.num", fmt_list(s.c_filter.num()));
        kv("l1.c.den", fmt_list(s.c_filter.den()));
        kv("l1.lyapunov_weight", s.lyapunov_weight.as_ref().map(fmt_matrix).unwrap_or_else(|| "identity".into()));
        kv("saturation", s.saturation.map(|v| fmt_list(&v)).unwrap_or_else(|| "none".into()));
        let cs = &self.condition;
        kv("l1.condition.rho0", format!("{}", cs.rho0));
        kv("l1.condition.rho_r", format!("{}", cs.rho_r));
        match &cs.f_delta {
            FDelta::Constant(f) => kv("l1.condition.f_delta", format!("{f}")),
            FDelta::Table(rows) => kv(
                "l1.condition.f_delta_table",
                rows.iter().map(|(d, f)| format!("{d}:{f}")).collect::<Vec<_>>().join(", "),
            ),
        }
        kv("l1.condition.l0", format!("{}", cs.l0));
        kv("l1.condition.m_r", format!("{}", cs.m_r));
        kv("l1.condition.gamma0", format!("{}", cs.gamma0));
        kv("l1.condition.k", cs.k.as_deref().map(fmt_list).unwrap_or_else(|| "zero".into()));
        kv("sweep.ts", fmt_list(&self.sweep_ts));
        kv("benchmark.horizon", format!("{}", self.benchmark.horizon));
        kv("benchmark.dt", format!("{}", self.benchmark.dt));
        kv("benchmark.z_cmd", format!("{}", self.benchmark.z_cmd));
        kv("benchmark.k", fmt_list(&self.benchmark.k));
        kv("benchmark.sin_amplitude", format!("{}", self.benchmark.sin_amplitude));
        kv("benchmark.sin_omega", format!("{}", self.benchmark.sin_omega));
        kv("benchmark.tanh_gain", format!("{}", self.benchmark.tanh_gain));
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_parse() {
        let one = parse_config(SCENARIO_1).unwrap();
        let two = parse_config(SCENARIO_2).unwrap();
        assert_eq!(one.scenario.speed, 2.0);
        assert_eq!(two.scenario.speed, 5.0);
        assert_eq!(one, RunConfig::default());
        one.scenario.validate().unwrap();
    }

    #[test]
    fn echo_round_trips() {
        let mut c = parse_config(SCENARIO_1).unwrap();
        c.scenario.dwells = Some(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        c.scenario.saturation = Some([0.4, 300.0]);
        c.scenario.disturbance.waves.decay_wavenumber = 0.1 / 3.0;
        c.condition.f_delta = FDelta::Table(vec![(10.0, 0.5), (1e5, 0.75)]);
        c.condition.k = Some(vec![0.25, -1.0 / 7.0]);
        let text = c.to_text();
        assert_eq!(parse_config(&text).unwrap(), c);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_config("scenario.speed = 2\n\n  bogus.key = 1\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.to_string().starts_with("line 3: unknown key"));
        assert_eq!(parse_config("scenario.speed = fast").unwrap_err().line, Some(1));
        assert_eq!(parse_config("# c\nscenario.case = 4").unwrap_err().line, Some(2));
        assert_eq!(parse_config("a.b\n").unwrap_err().line, Some(1));
        assert_eq!(parse_config("lqr.q = 1 2; 3\n").unwrap_err().line, Some(1));
        let dup = parse_config("scenario.speed = 2\nscenario.speed = 5\n").unwrap_err();
        assert_eq!(dup.line, Some(2));
    }

    #[test]
    fn values_and_comments() {
        let c = parse_config(
            "scenario.case = 1 # naive\nlqr.q = diag(1, 2, 3, 4)\nfiltered.r = 1 0; 0 2\nl1.c.den = 1 0.02 0.0001\nl1.c.num = 0.0001\ndisturbance.wave.omega = 0.5\n",
        )
        .unwrap();
        assert_eq!(c.scenario.case, ControllerCase::Naive);
        assert_eq!(c.scenario.q[(2, 2)], 3.0);
        assert_eq!(c.scenario.weights.r[(1, 1)], 2.0);
        assert_eq!(c.scenario.c_filter.den(), &[1.0, 0.02, 0.0001]);
        assert_eq!(c.benchmark.c_filter, c.scenario.c_filter);
        assert_eq!(c.scenario.disturbance.waves.decay_wavenumber, 0.25 / 9.81);
    }
}
