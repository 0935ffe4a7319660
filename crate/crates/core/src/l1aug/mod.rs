//! Sampled-data L1 adaptive augmentation of one output channel.
//!
//! The autopilot loop is treated as `z = M(s) (z_aug + σ)`. A discrete
//! predictor of the desired model estimates `σ` once per sample, and the
//! estimate is filtered through `O(s) = C(s) M⁻¹(s) C_m (sI - A_m)⁻¹` to
//! correct the command handed to the autopilot.

mod condition;
mod reference;

pub use condition::{check_l1_condition, FDelta, L1ConditionReport, L1Constants, PlantAbstraction};
pub use reference::{
    reference_system_simulate, run_sample_time_benchmark, sample_time_sweep, BenchmarkGap, ReferenceTrace,
    SampleTimeBenchmark,
};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lti::linalg::{inverse, orthogonal_complement_rows, sqrt_psd};
use crate::lti::{
    exp_and_integral, expm, is_hurwitz, minreal, series, solve_lyapunov, tf_to_ss, StateSpaceModel, TransferFunction,
    DEFAULT_MINREAL_TOL,
};

/// The default desired model `0.0064 / (s² + 0.16 s + 0.0064)`.
pub fn default_desired_tf() -> TransferFunction {
    TransferFunction::new(vec![0.0064], vec![1.0, 0.16, 0.0064]).expect("valid")
}

/// The default low-pass filter `0.01³ / (s + 0.01)³`.
pub fn default_c_filter() -> TransferFunction {
    TransferFunction::new(vec![1e-6], vec![1.0, 0.03, 3e-4, 1e-6]).expect("valid")
}

pub const DEFAULT_SAMPLE_TIME: f64 = 0.05;

/// Desired closed-loop model with unit DC gain.
#[derive(Debug, Clone, PartialEq)]
pub struct DesiredModel {
    pub tf: TransferFunction,
    pub realization: StateSpaceModel,
    /// Moore–Penrose pseudoinverse of the row `C_m`.
    pub c_m_pinv: DVector<f64>,
}

impl DesiredModel {
    pub fn n(&self) -> usize {
        self.realization.n_states()
    }

    pub fn a_m(&self) -> &DMatrix<f64> {
        self.realization.a()
    }

    pub fn b_m(&self) -> &DMatrix<f64> {
        self.realization.b()
    }

    pub fn c_m(&self) -> &DMatrix<f64> {
        self.realization.c()
    }

    /// `-C_m A_m⁻¹ B_m`
    pub fn dc_gain(&self) -> f64 {
        self.realization.dc_gain().map(|g| g[(0, 0)]).unwrap_or(f64::NAN)
    }
}

pub fn build_desired_model(tf: &TransferFunction) -> Result<DesiredModel> {
    if !tf.is_strictly_proper() {
        return Err(Error::DesiredModel("M(s) must be strictly proper".into()));
    }
    // keep the canonical coordinates unless states are actually removed
    let canonical = tf_to_ss(tf)?;
    let reduced = minreal(&canonical, DEFAULT_MINREAL_TOL)?;
    let realization = if reduced.n_states() == canonical.n_states() { canonical } else { reduced };
    let (stable, abscissa) = is_hurwitz(realization.a());
    if !stable {
        return Err(Error::DesiredModel(format!("M(s) is not stable (spectral abscissa {abscissa:e})")));
    }
    let dc = realization.dc_gain()?[(0, 0)];
    if (dc - 1.0).abs() > 1e-10 {
        return Err(Error::DesiredModel(format!("M(0) = {dc}, but the desired model must satisfy M(0) = 1")));
    }
    let c = realization.c();
    let cc = (c * c.transpose())[(0, 0)];
    if cc == 0.0 {
        return Err(Error::DesiredModel("C_m is zero".into()));
    }
    let c_m_pinv = DVector::from_iterator(c.ncols(), c.iter().map(|v| v / cc));
    Ok(DesiredModel { tf: tf.clone(), realization, c_m_pinv })
}

/// Piecewise-constant adaptation law at sample time `ts`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationMatrices {
    pub ts: f64,
    /// `e^{A_m T_s}`
    pub phi_d: DMatrix<f64>,
    /// `∫_0^{T_s} e^{A_m τ} dτ`
    pub gamma_d: DMatrix<f64>,
    /// Solution of `A_mᵀ P + P A_m = -W`.
    pub p: DMatrix<f64>,
    /// Rows orthogonal to `C_m √P⁻¹`.
    pub d: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    pub phi_ts: DMatrix<f64>,
    /// Maps the output error `ẑ - z` to `σ̂`.
    pub gain: DVector<f64>,
}

pub fn build_adaptation(model: &DesiredModel, ts: f64, lyapunov_weight: &DMatrix<f64>) -> Result<AdaptationMatrices> {
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(Error::InvalidArgument(format!("sample time {ts} must be positive")));
    }
    let n = model.n();
    let a_m = model.a_m();
    if lyapunov_weight.shape() != (n, n) {
        return Err(Error::Dimension(format!("Lyapunov weight must be {n}x{n}")));
    }
    let p = solve_lyapunov(a_m, lyapunov_weight)?;
    let sqrt_p = sqrt_psd(&p);
    let sqrt_p_inv = inverse(&sqrt_p, "square root of the Lyapunov solution")?;
    let v = &sqrt_p_inv * model.c_m().transpose();
    let d = orthogonal_complement_rows(&v);

    let mut lambda = DMatrix::zeros(n, n);
    lambda.view_mut((0, 0), (1, n)).copy_from(model.c_m());
    if n > 1 {
        lambda.view_mut((1, 0), (n - 1, n)).copy_from(&(&d * &sqrt_p));
    }
    let lambda_inv = inverse(&lambda, "Lambda")?;
    let a_bar = &lambda * a_m * &lambda_inv;
    let (e_bar, phi_ts) = exp_and_integral(&a_bar, &lambda, ts)?;
    let phi_inv = inverse(&phi_ts, "Phi(Ts)")?;
    let gain = -(phi_inv * e_bar.column(0));

    let (phi_d, gamma_d) = exp_and_integral(a_m, &DMatrix::identity(n, n), ts)?;
    Ok(AdaptationMatrices { ts, phi_d, gamma_d, p, d, lambda, phi_ts, gain })
}

/// Realization of `O(s) = C(s) M⁻¹(s) C_m (sI - A_m)⁻¹` (1 output, `n` inputs).
pub fn build_o_system(c_filter: &TransferFunction, model: &DesiredModel) -> Result<StateSpaceModel> {
    check_c_filter(c_filter)?;
    let c_rd = c_filter.relative_degree();
    let m_rd = model.tf.relative_degree();
    if c_rd < m_rd {
        return Err(Error::Properness {
            c_relative_degree: c_rd.max(0) as usize,
            m_relative_degree: m_rd.max(0) as usize,
        });
    }
    let c_over_m = c_filter.mul(&model.tf.inverse()?);
    let n = model.n();
    let front = StateSpaceModel::continuous(
        model.a_m().clone(),
        DMatrix::identity(n, n),
        model.c_m().clone(),
        DMatrix::zeros(1, n),
    )?;
    let o = series(&front, &tf_to_ss(&c_over_m)?)?;
    minreal(&o, DEFAULT_MINREAL_TOL)
}

pub(crate) fn check_c_filter(c: &TransferFunction) -> Result<()> {
    if !c.is_strictly_proper() {
        return Err(Error::Filter("C(s) must be strictly proper".into()));
    }
    check_c_filter_stable(c)
}

/// Stability and `C(0) = 1`; a static `C = 1` passes.
pub(crate) fn check_c_filter_stable(c: &TransferFunction) -> Result<()> {
    let abscissa = c.poles().iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
    if c.den_degree() > 0 && !(abscissa < 0.0) {
        return Err(Error::Filter(format!("C(s) is not stable (pole real part {abscissa:e})")));
    }
    let dc = c.dc_gain();
    if (dc - 1.0).abs() > 1e-10 {
        return Err(Error::Filter(format!("C(0) = {dc}, but C(0) = 1 is required")));
    }
    Ok(())
}

/// `O(s)` sampled with zero-order hold; the input map folds in `e^{-A_m T_s}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOSystem {
    pub continuous: StateSpaceModel,
    pub a_d: DMatrix<f64>,
    /// `(∫_0^{T_s} e^{A_o τ} dτ) B_o e^{-A_m T_s}`
    pub b_eff: DMatrix<f64>,
    pub c_o: DMatrix<f64>,
}

impl DiscreteOSystem {
    pub fn new(o: StateSpaceModel, model: &DesiredModel, ts: f64) -> Result<Self> {
        let (a_d, b_d) = exp_and_integral(o.a(), o.b(), ts)?;
        let e_neg = expm(&(model.a_m() * -ts))?;
        let b_eff = b_d * e_neg;
        let c_o = o.c().clone();
        Ok(Self { continuous: o, a_d, b_eff, c_o })
    }

    pub fn n_states(&self) -> usize {
        self.a_d.nrows()
    }
}

/// Mutable part of one augmentor.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentorState {
    pub x_hat: DVector<f64>,
    pub sigma_hat: DVector<f64>,
    pub x_u: DVector<f64>,
    pub step_index: u64,
    pub ts: f64,
}

impl AugmentorState {
    /// `x̂[0] = C_m† z₀`, `x_u[0] = 0`.
    pub fn new(model: &DesiredModel, o: &DiscreteOSystem, ts: f64, z0: f64) -> Self {
        Self {
            x_hat: &model.c_m_pinv * z0,
            sigma_hat: DVector::zeros(model.n()),
            x_u: DVector::zeros(o.n_states()),
            step_index: 0,
            ts,
        }
    }
}

fn estimate(state: &AugmentorState, model: &DesiredModel, adaptation: &AdaptationMatrices, z: f64) -> DVector<f64> {
    let z_hat = (model.c_m() * &state.x_hat)[(0, 0)];
    &adaptation.gain * (z_hat - z)
}

/// `σ̂[i] = gain (ẑ[i] - z[i])`, then `x̂[i+1] = Φ_d x̂[i] + Γ_d (B_m z_aug[i] + σ̂[i])`.
pub fn predictor_step(
    state: &mut AugmentorState,
    model: &DesiredModel,
    adaptation: &AdaptationMatrices,
    z_aug: f64,
    z: f64,
) -> DVector<f64> {
    let sigma = estimate(state, model, adaptation, z);
    let drive = model.b_m().column(0) * z_aug + &sigma;
    state.x_hat = &adaptation.phi_d * &state.x_hat + &adaptation.gamma_d * drive;
    state.sigma_hat = sigma.clone();
    sigma
}

/// `z_aug[i] = z_cmd[i] - C_o x_u[i]`, then advances `x_u` with `σ̂[i]`.
pub fn control_step(state: &mut AugmentorState, o: &DiscreteOSystem, sigma_hat: &DVector<f64>, z_cmd: f64) -> f64 {
    let z_aug = z_cmd - (&o.c_o * &state.x_u)[(0, 0)];
    state.x_u = &o.a_d * &state.x_u + &o.b_eff * sigma_hat;
    state.step_index += 1;
    z_aug
}

/// Settings for one augmented channel.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Params {
    pub desired: TransferFunction,
    pub c_filter: TransferFunction,
    pub ts: f64,
    pub lyapunov_weight: Option<DMatrix<f64>>,
}

impl Default for L1Params {
    fn default() -> Self {
        Self {
            desired: default_desired_tf(),
            c_filter: default_c_filter(),
            ts: DEFAULT_SAMPLE_TIME,
            lyapunov_weight: None,
        }
    }
}

/// One channel of the augmentation: predictor, adaptation and control law.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Augmentor {
    pub model: DesiredModel,
    pub adaptation: AdaptationMatrices,
    pub o: DiscreteOSystem,
    pub state: AugmentorState,
    last_output: f64,
}

impl L1Augmentor {
    pub fn new(params: &L1Params, z0: f64) -> Result<Self> {
        let model = build_desired_model(&params.desired)?;
        let n = model.n();
        let w = params.lyapunov_weight.clone().unwrap_or_else(|| DMatrix::identity(n, n));
        let adaptation = build_adaptation(&model, params.ts, &w)?;
        let o = DiscreteOSystem::new(build_o_system(&params.c_filter, &model)?, &model, params.ts)?;
        let state = AugmentorState::new(&model, &o, params.ts, z0);
        Ok(Self { model, adaptation, o, state, last_output: z0 })
    }

    pub fn ts(&self) -> f64 {
        self.adaptation.ts
    }

    /// One sample: returns `z_aug[i]`, to be held until the next sample.
    pub fn step(&mut self, z_cmd: f64, z: f64) -> f64 {
        let sigma = estimate(&self.state, &self.model, &self.adaptation, z);
        let z_aug = control_step(&mut self.state, &self.o, &sigma, z_cmd);
        let drive = self.model.b_m().column(0) * z_aug + &sigma;
        self.state.x_hat = &self.adaptation.phi_d * &self.state.x_hat + &self.adaptation.gamma_d * drive;
        self.state.sigma_hat = sigma;
        self.last_output = z_aug;
        z_aug
    }

    pub fn output(&self) -> f64 {
        self.last_output
    }

    pub fn is_finite(&self) -> bool {
        self.state.x_hat.iter().chain(self.state.x_u.iter()).all(|v| v.is_finite())
    }
}
