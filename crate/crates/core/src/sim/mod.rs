//! Fixed-step closed-loop simulation of plant, disturbances, LQR and L1 augmentation.

mod metrics;
mod trace;

pub use metrics::{compute_metrics, tone_power, HoldMetrics, Metrics};
pub use trace::{read_csv, write_csv, SimTrace, TraceRow, COLUMNS};

use nalgebra::DMatrix;

use crate::disturbance::DisturbanceModel;
use crate::error::{Error, Result};
use crate::l1aug::{
    default_c_filter, default_desired_tf, L1Augmentor, L1Params, PlantAbstraction, DEFAULT_SAMPLE_TIME,
};
use crate::lti::TransferFunction;
use crate::plant::{allocate, bb2_model, VehiclePlant};
use crate::wavelqr::{
    design_bandpass, filtered_gain, naive_gain, BandpassDesign, CostWeights, LqrDesign, DEFAULT_FILTER_ORDER,
    DEFAULT_NOTCH_DEPTH, DEFAULT_RELATIVE_WIDTH,
};

/// Controller architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerCase {
    /// Plain LQR, `z_aug = z_cmd`.
    Naive = 1,
    /// LQR with band-pass input weighting.
    Filtered = 2,
    /// Filtered LQR plus L1 augmentation of depth and pitch.
    Augmented = 3,
}

impl ControllerCase {
    pub fn from_number(n: u32) -> Result<Self> {
        match n {
            1 => Ok(Self::Naive),
            2 => Ok(Self::Filtered),
            3 => Ok(Self::Augmented),
            _ => Err(Error::InvalidArgument(format!("case {n} must be 1, 2 or 3"))),
        }
    }

    pub fn number(self) -> u32 {
        self as u32
    }

    pub fn filtered(self) -> bool {
        self != Self::Naive
    }

    pub fn augmented(self) -> bool {
        self == Self::Augmented
    }
}

/// Band-pass weighting filters; the center defaults to the wave frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub order: usize,
    pub notch_depth: f64,
    pub relative_width: f64,
    pub center_omega: Option<f64>,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            order: DEFAULT_FILTER_ORDER,
            notch_depth: DEFAULT_NOTCH_DEPTH,
            relative_width: DEFAULT_RELATIVE_WIDTH,
            center_omega: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub speed: f64,
    pub case: ControllerCase,
    pub duration: f64,
    pub integrator_step: f64,
    pub controller_sample: f64,
    /// Held depths (m), visited in order.
    pub depths: Vec<f64>,
    /// Dwell per depth (s); `None` splits `duration` evenly.
    pub dwells: Option<Vec<f64>>,
    pub theta_cmd: f64,
    pub disturbance: DisturbanceModel,
    /// Case-1 weights.
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    /// Case-2/3 weights.
    pub weights: CostWeights,
    pub filter: FilterParams,
    pub desired_z: TransferFunction,
    pub desired_theta: TransferFunction,
    pub c_filter: TransferFunction,
    pub lyapunov_weight: Option<DMatrix<f64>>,
    /// Keep every `decimation`-th integrator step in the trace.
    pub decimation: usize,
    /// Symmetric limits on `(δ_v, δ_m)`.
    pub saturation: Option<[f64; 2]>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let weights = CostWeights::default();
        Self {
            speed: 2.0,
            case: ControllerCase::Augmented,
            duration: 30_000.0,
            integrator_step: 0.01,
            controller_sample: DEFAULT_SAMPLE_TIME,
            depths: vec![15.0, 20.0, 50.0, 20.0, 15.0],
            dwells: None,
            theta_cmd: 0.0,
            disturbance: DisturbanceModel::default(),
            q: weights.q1.clone(),
            r: weights.r.clone(),
            weights,
            filter: FilterParams::default(),
            desired_z: default_desired_tf(),
            desired_theta: default_desired_tf(),
            c_filter: default_c_filter(),
            lyapunov_weight: None,
            decimation: 100,
            saturation: None,
        }
    }
}

impl ScenarioConfig {
    /// `(depth, dwell)` pairs.
    pub fn profile(&self) -> Vec<(f64, f64)> {
        match &self.dwells {
            Some(d) => self.depths.iter().copied().zip(d.iter().copied()).collect(),
            None => {
                let dwell = self.duration / self.depths.len().max(1) as f64;
                self.depths.iter().map(|&z| (z, dwell)).collect()
            }
        }
    }

    /// Integrator steps per controller sample.
    pub fn steps_per_sample(&self) -> usize {
        (self.controller_sample / self.integrator_step).round() as usize
    }

    pub fn wave_omega(&self) -> f64 {
        self.disturbance.waves.omega
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration {} must be positive", self.duration));
        }
        if !(self.integrator_step > 0.0 && self.integrator_step.is_finite()) {
            return bad(format!("integrator step {} must be positive", self.integrator_step));
        }
        if !(self.controller_sample > 0.0 && self.controller_sample.is_finite()) {
            return bad(format!("controller sample time {} must be positive", self.controller_sample));
        }
        let ratio = self.controller_sample / self.integrator_step;
        if ratio.round() < 1.0 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return bad(format!(
                "integrator step {} does not divide the controller sample time {}",
                self.integrator_step, self.controller_sample
            ));
        }
        let steps = self.duration / self.integrator_step;
        if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
            return bad(format!(
                "integrator step {} does not divide the duration {}",
                self.integrator_step, self.duration
            ));
        }
        if self.depths.is_empty() {
            return bad("command profile is empty".into());
        }
        if self.depths.iter().any(|d| !d.is_finite()) {
            return bad("command depths must be finite".into());
        }
        if let Some(d) = &self.dwells {
            if d.len() != self.depths.len() {
                return bad(format!("{} dwells given for {} depths", d.len(), self.depths.len()));
            }
            if d.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return bad("dwells must be positive".into());
            }
        }
        if self.decimation == 0 {
            return bad("decimation must be at least 1".into());
        }
        if let Some(s) = self.saturation {
            if !(s[0] > 0.0 && s[1] > 0.0) {
                return bad("saturation limits must be positive".into());
            }
        }
        if !self.theta_cmd.is_finite() {
            return bad("theta command must be finite".into());
        }
        if self.q.shape() != (4, 4) || self.r.shape() != (2, 2) {
            return Err(Error::Dimension("case-1 Q must be 4x4 and R 2x2".into()));
        }
        self.disturbance.validate()
    }
}

/// Piecewise-constant command; past the last dwell the last depth is held.
pub fn depth_profile(t: f64, profile: &[(f64, f64)]) -> f64 {
    let mut end = 0.0;
    for &(depth, dwell) in profile {
        end += dwell;
        if t < end {
            return depth;
        }
    }
    profile.last().map(|p| p.0).unwrap_or(0.0)
}

/// Controllers synthesized for one scenario.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub plant: VehiclePlant,
    pub lqr: LqrDesign,
    /// Depth and pitch augmentors for case 3.
    pub l1: Option<(L1Augmentor, L1Augmentor)>,
}

fn filters(config: &ScenarioConfig) -> Result<(BandpassDesign, BandpassDesign)> {
    let f = &config.filter;
    let w = f.center_omega.unwrap_or(config.wave_omega());
    let hv = design_bandpass(w, f.order, f.notch_depth, f.relative_width)?;
    Ok((hv.clone(), hv))
}

pub fn synthesize(config: &ScenarioConfig) -> Result<Synthesis> {
    let plant = bb2_model(config.speed)?;
    let lqr = if config.case.filtered() {
        let (hv, hm) = filters(config)?;
        filtered_gain(&plant, &config.weights, &hv, &hm)?
    } else {
        naive_gain(&plant, &config.q, &config.r)?
    };
    let l1 = if config.case.augmented() {
        let params = |desired: &TransferFunction| L1Params {
            desired: desired.clone(),
            c_filter: config.c_filter.clone(),
            ts: config.controller_sample,
            lyapunov_weight: config.lyapunov_weight.clone(),
        };
        let z0 = config.depths[0];
        Some((
            L1Augmentor::new(&params(&config.desired_z), z0)?,
            L1Augmentor::new(&params(&config.desired_theta), 0.0)?,
        ))
    } else {
        None
    };
    Ok(Synthesis { plant, lqr, l1 })
}

/// Linear loop from `z_aug` (channel 0) or `θ_aug` (channel 1) to the
/// matching output, with the other reference held at zero.
pub fn closed_loop_abstraction(lqr: &LqrDesign, channel: usize) -> PlantAbstraction {
    let k = lqr.k_hat();
    let a_z = &lqr.a - &lqr.b * k;
    let b_z = &lqr.b * k.columns(channel, 1);
    let n = a_z.nrows();
    let mut c_z = DMatrix::zeros(1, n);
    c_z[(0, channel)] = 1.0;
    PlantAbstraction { a_z, b_z, c_z }
}

/// Flat copy of the closed-loop data used by the inner loop.
struct Dynamics {
    plant: VehiclePlant,
    /// `[A_Hv | A_Hm]` blocks, row-major, with input and output maps.
    hv: FilterBlock,
    hm: FilterBlock,
    /// 2 x n gain, row-major.
    k: Vec<f64>,
    n: usize,
    disturbance: DisturbanceModel,
    saturation: Option<[f64; 2]>,
}

struct FilterBlock {
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: f64,
}

impl FilterBlock {
    fn new(f: Option<&BandpassDesign>) -> Self {
        match f {
            None => Self { n: 0, a: Vec::new(), b: Vec::new(), c: Vec::new(), d: 1.0 },
            Some(f) => {
                let r = &f.realization;
                let n = r.n_states();
                Self {
                    n,
                    a: (0..n * n).map(|i| r.a()[(i / n, i % n)]).collect(),
                    b: (0..n).map(|i| r.b()[(i, 0)]).collect(),
                    c: (0..n).map(|i| r.c()[(0, i)]).collect(),
                    d: r.d()[(0, 0)],
                }
            }
        }
    }

    fn output(&self, x: &[f64], u: f64) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum::<f64>() + self.d * u
    }

    fn rate(&self, x: &[f64], u: f64, out: &mut [f64]) {
        for i in 0..self.n {
            let row = &self.a[i * self.n..(i + 1) * self.n];
            out[i] = row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + self.b[i] * u;
        }
    }
}

/// Signals at one state.
struct Eval {
    u: [f64; 2],
    wave: [f64; 2],
    suction: [f64; 2],
}

impl Dynamics {
    fn new(syn: &Synthesis, config: &ScenarioConfig) -> Self {
        let (hv, hm) = match &syn.lqr.filters {
            Some((v, m)) => (FilterBlock::new(Some(v)), FilterBlock::new(Some(m))),
            None => (FilterBlock::new(None), FilterBlock::new(None)),
        };
        let k = syn.lqr.k_hat();
        let n = k.ncols();
        Self {
            plant: syn.plant.clone(),
            k: (0..2 * n).map(|i| k[(i / n, i % n)]).collect(),
            n,
            hv,
            hm,
            disturbance: config.disturbance,
            saturation: config.saturation,
        }
    }

    fn evaluate(&self, s: &[f64], t: f64, r: [f64; 2]) -> Eval {
        let xt = [s[0] - r[0], s[1] - r[1], s[2], s[3]];
        let mut u = [0.0; 2];
        for (i, ui) in u.iter_mut().enumerate() {
            let row = &self.k[i * self.n..(i + 1) * self.n];
            let acc: f64 = row[..4].iter().zip(&xt).map(|(k, x)| k * x).sum::<f64>()
                + row[4..].iter().zip(&s[4..]).map(|(k, x)| k * x).sum::<f64>();
            *ui = -acc;
        }
        if let Some(lim) = self.saturation {
            u[0] = u[0].clamp(-lim[0], lim[0]);
            u[1] = u[1].clamp(-lim[1], lim[1]);
        }
        let (wave, suction) = self.disturbance.components(t, s[0]);
        Eval { u, wave, suction }
    }

    fn rate(&self, s: &[f64], t: f64, r: [f64; 2], out: &mut [f64]) {
        let e = self.evaluate(s, t, r);
        let xt = [s[0] - r[0], s[1] - r[1], s[2], s[3]];
        let f = [e.wave[0] + e.suction[0], e.wave[1] + e.suction[1]];
        out[..4].copy_from_slice(&self.plant.rate(&xt, &e.u, &f));
        let nv = self.hv.n;
        let (ov, om) = out[4..].split_at_mut(nv);
        self.hv.rate(&s[4..4 + nv], e.u[0], ov);
        self.hm.rate(&s[4 + nv..], e.u[1], om);
    }
}

struct Rk4 {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Self { k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]], tmp: vec![0.0; n] }
    }

    fn step(&mut self, dyns: &Dynamics, s: &mut [f64], t: f64, h: f64, r: [f64; 2]) {
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        dyns.rate(s, t, r, k1);
        for i in 0..s.len() {
            tmp[i] = s[i] + 0.5 * h * k1[i];
        }
        dyns.rate(tmp, t + 0.5 * h, r, k2);
        for i in 0..s.len() {
            tmp[i] = s[i] + 0.5 * h * k2[i];
        }
        dyns.rate(tmp, t + 0.5 * h, r, k3);
        for i in 0..s.len() {
            tmp[i] = s[i] + h * k3[i];
        }
        dyns.rate(tmp, t + h, r, k4);
        for i in 0..s.len() {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

/// States beyond this magnitude abort the run.
const OVERFLOW_LIMIT: f64 = 1e12;

/// Synthesizes the controllers and runs the scenario.
pub fn run(config: &ScenarioConfig) -> Result<SimTrace> {
    config.validate()?;
    let syn = synthesize(config)?;
    Ok(run_with(config, syn))
}

/// Runs with already synthesized controllers. Numeric blow-up ends the run
/// early with [`SimTrace::aborted`] set.
pub fn run_with(config: &ScenarioConfig, syn: Synthesis) -> SimTrace {
    let dyns = Dynamics::new(&syn, config);
    let mut l1 = syn.l1;
    let profile = config.profile();
    let h = config.integrator_step;
    let steps = (config.duration / h).round() as usize;
    let per_sample = config.steps_per_sample();

    let mut s = vec![0.0; 4 + dyns.hv.n + dyns.hm.n];
    s[0] = config.depths[0];
    let mut rk = Rk4::new(s.len());
    let mut trace = SimTrace::new(h * config.decimation as f64);
    let mut r = [config.depths[0], config.theta_cmd];

    for i in 0..=steps {
        let t = i as f64 * h;
        let z_cmd = depth_profile(t, &profile);
        match l1.as_mut() {
            Some((az, at)) => {
                if i % per_sample == 0 {
                    r = [az.step(z_cmd, s[0]), at.step(config.theta_cmd, s[1])];
                }
            }
            None => r = [z_cmd, config.theta_cmd],
        }
        let finite = s.iter().all(|v| v.is_finite() && v.abs() < OVERFLOW_LIMIT) && r.iter().all(|v| v.is_finite());
        if !finite {
            trace.aborted = Some(format!("state left the finite range at t = {t}"));
            break;
        }
        if i % config.decimation == 0 {
            let e = dyns.evaluate(&s, t, r);
            let nv = dyns.hv.n;
            let fins = allocate(0.0, e.u[0]);
            trace.rows.push(TraceRow {
                t,
                z_cmd,
                theta_cmd: config.theta_cmd,
                z_aug: r[0],
                theta_aug: r[1],
                z: s[0],
                theta: s[1],
                w: s[2],
                q: s[3],
                delta_v: e.u[0],
                delta_m: e.u[1],
                fins: fins.to_array(),
                f_wave_v: e.wave[0],
                f_wave_m: e.wave[1],
                f_suction_v: e.suction[0],
                f_suction_m: e.suction[1],
                hv_out: dyns.hv.output(&s[4..4 + nv], e.u[0]),
                hm_out: dyns.hm.output(&s[4 + nv..], e.u[1]),
            });
        }
        if i < steps {
            rk.step(&dyns, &mut s, t, h, r);
        }
    }
    trace
}
