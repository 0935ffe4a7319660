use std::f64::consts::PI;
use std::fmt::Write as _;

use super::SimTrace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoldMetrics {
    pub index: usize,
    pub depth: f64,
    pub start: f64,
    pub end: f64,
    /// Mean `z - z_cmd` over the final 10% of the hold.
    pub steady_state_error: f64,
    /// Power (`amplitude²/2`) at the wave frequency over the final half.
    pub wave_power_delta_v: f64,
    pub wave_power_delta_m: f64,
    /// False when the hold is shorter than four wave periods.
    pub reliable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub holds: Vec<HoldMetrics>,
    pub rms_depth_error: f64,
    pub rms_pitch: f64,
    /// `∫ δ_v² dt`
    pub effort_delta_v: f64,
    /// `∫ δ_m² dt`
    pub effort_delta_m: f64,
}

impl Metrics {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "rms_depth_error = {:e}", self.rms_depth_error);
        let _ = writeln!(s, "rms_pitch = {:e}", self.rms_pitch);
        let _ = writeln!(s, "effort_delta_v = {:e}", self.effort_delta_v);
        let _ = writeln!(s, "effort_delta_m = {:e}", self.effort_delta_m);
        for h in &self.holds {
            let _ = writeln!(s, "[hold.{}]", h.index + 1);
            let _ = writeln!(s, "depth = {}", h.depth);
            let _ = writeln!(s, "window = {} {}", h.start, h.end);
            let _ = writeln!(s, "steady_state_error = {:e}", h.steady_state_error);
            let _ = writeln!(s, "wave_power_delta_v = {:e}", h.wave_power_delta_v);
            let _ = writeln!(s, "wave_power_delta_m = {:e}", h.wave_power_delta_m);
            if !h.reliable {
                let _ = writeln!(s, "warning = hold shorter than four wave periods; wave power is unreliable");
            }
        }
        s
    }
}

/// Power `a²/2` of the component at `omega` of a uniformly sampled signal.
///
/// The signal is linearly detrended and Hann-windowed, then projected onto
/// `e^{-jωt}`; the window's coherent gain is divided out.
pub fn tone_power(samples: &[f64], dt: f64, omega: f64) -> f64 {
    let n = samples.len();
    if n < 3 {
        return 0.0;
    }
    // least-squares line over k = 0..n
    let nf = n as f64;
    let k_mean = (nf - 1.0) / 2.0;
    let y_mean = samples.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, y) in samples.iter().enumerate() {
        let dk = k as f64 - k_mean;
        sxy += dk * (y - y_mean);
        sxx += dk * dk;
    }
    let slope = sxy / sxx;

    let (mut re, mut im, mut wsum) = (0.0, 0.0, 0.0);
    for (k, y) in samples.iter().enumerate() {
        let kf = k as f64;
        let w = 0.5 * (1.0 - (2.0 * PI * kf / (nf - 1.0)).cos());
        let v = (y - y_mean - slope * (kf - k_mean)) * w;
        let ph = omega * kf * dt;
        re += v * ph.cos();
        im -= v * ph.sin();
        wsum += w;
    }
    let amplitude = 2.0 * (re * re + im * im).sqrt() / wsum;
    amplitude * amplitude / 2.0
}

fn window(trace: &SimTrace, from: f64, to: f64) -> std::ops::Range<usize> {
    let lo = trace.rows.partition_point(|r| r.t < from - 1e-9);
    let hi = trace.rows.partition_point(|r| r.t < to - 1e-9);
    lo..hi
}

fn integral_sq(trace: &SimTrace, f: impl Fn(&super::TraceRow) -> f64) -> f64 {
    trace.rows.windows(2).map(|w| 0.5 * (w[1].t - w[0].t) * (f(&w[0]).powi(2) + f(&w[1]).powi(2))).sum()
}

pub fn compute_metrics(trace: &SimTrace, wave_omega: f64, profile: &[(f64, f64)]) -> Result<Metrics> {
    if trace.rows.len() < 2 {
        return Err(Error::InvalidArgument("trace has fewer than two rows".into()));
    }
    if !(wave_omega > 0.0) {
        return Err(Error::InvalidArgument(format!("wave frequency {wave_omega} must be positive")));
    }
    let dt = trace.rows[1].t - trace.rows[0].t;
    let period = 2.0 * PI / wave_omega;
    let mut holds = Vec::with_capacity(profile.len());
    let mut start = 0.0;
    for (index, &(depth, dwell)) in profile.iter().enumerate() {
        let end = start + dwell;
        if trace.end_time() + dt < end - 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "trace ends at {} s, before hold {} ends at {end} s",
                trace.end_time(),
                index + 1
            )));
        }
        let tail = window(trace, end - 0.1 * dwell, end);
        let half = window(trace, end - 0.5 * dwell, end);
        if tail.len() < 1 || half.len() < 3 {
            return Err(Error::InvalidArgument(format!("hold {} has too few samples", index + 1)));
        }
        let rows = &trace.rows;
        let sse = rows[tail.clone()].iter().map(|r| r.z - r.z_cmd).sum::<f64>() / tail.len() as f64;
        let dv: Vec<f64> = rows[half.clone()].iter().map(|r| r.delta_v).collect();
        let dm: Vec<f64> = rows[half].iter().map(|r| r.delta_m).collect();
        holds.push(HoldMetrics {
            index,
            depth,
            start,
            end,
            steady_state_error: sse,
            wave_power_delta_v: tone_power(&dv, dt, wave_omega),
            wave_power_delta_m: tone_power(&dm, dt, wave_omega),
            reliable: dwell >= 4.0 * period,
        });
        start = end;
    }
    let n = trace.rows.len() as f64;
    let rms = |f: &dyn Fn(&super::TraceRow) -> f64| (trace.rows.iter().map(|r| f(r).powi(2)).sum::<f64>() / n).sqrt();
    Ok(Metrics {
        holds,
        rms_depth_error: rms(&|r| r.z - r.z_cmd),
        rms_pitch: rms(&|r| r.theta),
        effort_delta_v: integral_sq(trace, |r| r.delta_v),
        effort_delta_m: integral_sq(trace, |r| r.delta_m),
    })
}
