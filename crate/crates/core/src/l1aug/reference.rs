//! Non-implementable reference system and the sampled-data convergence benchmark.

use nalgebra::{DMatrix, DVector};

use super::PlantAbstraction;
use super::{build_desired_model, default_c_filter, default_desired_tf, DesiredModel, L1Augmentor, L1Params};
use crate::error::{Error, Result};
use crate::lti::{tf_to_ss, TransferFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrace {
    pub t: Vec<f64>,
    pub x_ref: Vec<DVector<f64>>,
    pub u_ref: Vec<f64>,
    pub z_ref: Vec<f64>,
}

fn rk4<F: Fn(&DVector<f64>, f64) -> DVector<f64>>(f: F, x: &DVector<f64>, t: f64, h: f64) -> DVector<f64> {
    let k1 = f(x, t);
    let k2 = f(&(x + &k1 * (h / 2.0)), t + h / 2.0);
    let k3 = f(&(x + &k2 * (h / 2.0)), t + h / 2.0);
    let k4 = f(&(x + &k3 * h), t + h);
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Integrates
///
/// ```text
/// ẋ_ref = A_z x_ref + B_z (u_ref + σ(x_ref, t))
/// u_ref = z_cmd - C(s) σ_ref,   σ_ref = K x_ref + σ(x_ref, t) + H_in(s) x₀
/// ```
///
/// with classical RK4 at step `dt`. `C(s)` is realized as a state filter on
/// `σ_ref`; the `H_in x₀` term is the free response `C_m e^{A_m t}(I - C_m† C_m) x₀`.
#[allow(clippy::too_many_arguments)]
pub fn reference_system_simulate<S, Z>(
    plant: &PlantAbstraction,
    model: &DesiredModel,
    c_filter: &TransferFunction,
    k: &DMatrix<f64>,
    sigma: S,
    z_cmd: Z,
    x0: &DVector<f64>,
    duration: f64,
    dt: f64,
) -> Result<ReferenceTrace>
where
    S: Fn(&DVector<f64>, f64) -> f64,
    Z: Fn(f64) -> f64,
{
    let nz = plant.a_z.nrows();
    if x0.len() != nz || k.shape() != (1, nz) || plant.b_z.shape() != (nz, 1) || plant.c_z.shape() != (1, nz) {
        return Err(Error::Dimension("reference system dimensions are inconsistent".into()));
    }
    if !(dt > 0.0 && duration >= 0.0) {
        return Err(Error::InvalidArgument("dt must be positive and duration nonnegative".into()));
    }
    if (c_filter.dc_gain() - 1.0).abs() > 1e-10 {
        return Err(Error::Filter(format!("C(0) = {}, but C(0) = 1 is required", c_filter.dc_gain())));
    }
    let n = model.n();
    let free = &(DMatrix::identity(n, n) - &model.c_m_pinv * model.c_m());
    let xh0 = if x0.iter().all(|v| *v == 0.0) {
        DVector::zeros(n)
    } else if n == nz {
        free * x0
    } else {
        return Err(Error::Dimension("a nonzero x0 needs dim(A_z) = dim(A_m) for the H_in term".into()));
    };

    let cf = tf_to_ss(c_filter)?;
    let nc = cf.n_states();
    let (ac, bc, cc, dc) = (cf.a(), cf.b(), cf.c(), cf.d()[(0, 0)]);
    let a_m = model.a_m();
    let c_m = model.c_m();

    // state = [x_ref (nz), x_c (nc), x_h (n)]
    let split = |s: &DVector<f64>| -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        (s.rows(0, nz).into_owned(), s.rows(nz, nc).into_owned(), s.rows(nz + nc, n).into_owned())
    };
    let signals = |s: &DVector<f64>, t: f64| -> (f64, f64, f64) {
        let (x, xc, xh) = split(s);
        let sig = sigma(&x, t);
        let sigma_ref = (k * &x)[(0, 0)] + sig + (c_m * &xh)[(0, 0)];
        let u = z_cmd(t) - (cc * &xc)[(0, 0)] - dc * sigma_ref;
        (u, sig, sigma_ref)
    };
    let rate = |s: &DVector<f64>, t: f64| -> DVector<f64> {
        let (x, xc, xh) = split(s);
        let (u, sig, sigma_ref) = signals(s, t);
        let mut out = DVector::zeros(nz + nc + n);
        out.rows_mut(0, nz).copy_from(&(&plant.a_z * &x + &plant.b_z * (u + sig)));
        out.rows_mut(nz, nc).copy_from(&(ac * &xc + bc * sigma_ref));
        out.rows_mut(nz + nc, n).copy_from(&(a_m * &xh));
        out
    };

    let steps = (duration / dt).round() as usize;
    let mut state = DVector::zeros(nz + nc + n);
    state.rows_mut(0, nz).copy_from(x0);
    state.rows_mut(nz + nc, n).copy_from(&xh0);
    let mut trace = ReferenceTrace {
        t: Vec::with_capacity(steps + 1),
        x_ref: Vec::with_capacity(steps + 1),
        u_ref: Vec::with_capacity(steps + 1),
        z_ref: Vec::with_capacity(steps + 1),
    };
    for i in 0..=steps {
        let t = i as f64 * dt;
        let x = state.rows(0, nz).into_owned();
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("reference state at t = {t}")));
        }
        trace.t.push(t);
        trace.u_ref.push(signals(&state, t).0);
        trace.z_ref.push((&plant.c_z * &x)[(0, 0)]);
        trace.x_ref.push(x);
        if i < steps {
            state = rk4(rate, &state, t, dt);
        }
    }
    Ok(trace)
}

/// Gap between the sampled-data closed loop and the reference system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkGap {
    pub ts: f64,
    /// `sup_t ‖x_ref(t) - x(t)‖∞`
    pub gamma_x: f64,
    /// `sup_t |u_ref(t) - z_aug(t)|`
    pub gamma_u: f64,
}

/// Synthetic SISO loop `ẋ = (A_m + B_m K) x + B_m (z_aug + σ(x, t))` with
/// `σ = a sin(ω t) + b tanh(x₁)`, started at rest under a constant command.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTimeBenchmark {
    pub desired: TransferFunction,
    pub c_filter: TransferFunction,
    pub k: Vec<f64>,
    pub z_cmd: f64,
    pub sin_amplitude: f64,
    pub sin_omega: f64,
    pub tanh_gain: f64,
    pub horizon: f64,
    pub dt: f64,
}

impl Default for SampleTimeBenchmark {
    fn default() -> Self {
        Self {
            desired: default_desired_tf(),
            c_filter: default_c_filter(),
            k: vec![0.002, 0.05],
            z_cmd: 1.0,
            sin_amplitude: 0.2,
            sin_omega: 0.05,
            tanh_gain: 0.1,
            horizon: 400.0,
            dt: 0.01,
        }
    }
}

impl SampleTimeBenchmark {
    fn sigma(&self, x: &DVector<f64>, t: f64) -> f64 {
        self.sin_amplitude * (self.sin_omega * t).sin() + self.tanh_gain * x[0].tanh()
    }

    fn setup(&self) -> Result<(DesiredModel, PlantAbstraction, DMatrix<f64>)> {
        let model = build_desired_model(&self.desired)?;
        let n = model.n();
        if self.k.len() != n {
            return Err(Error::Dimension(format!("benchmark K needs {n} entries")));
        }
        let k = DMatrix::from_row_slice(1, n, &self.k);
        let plant = PlantAbstraction {
            a_z: model.a_m() + model.b_m() * &k,
            b_z: model.b_m().clone(),
            c_z: model.c_m().clone(),
        };
        Ok((model, plant, k))
    }

    pub fn plant(&self) -> Result<PlantAbstraction> {
        Ok(self.setup()?.1)
    }

    pub fn reference(&self) -> Result<ReferenceTrace> {
        let (model, plant, k) = self.setup()?;
        let x0 = DVector::zeros(model.n());
        reference_system_simulate(
            &plant,
            &model,
            &self.c_filter,
            &k,
            |x, t| self.sigma(x, t),
            |_| self.z_cmd,
            &x0,
            self.horizon,
            self.dt,
        )
    }

    /// Runs the sampled-data loop at `ts` and compares it with `reference`.
    pub fn gap(&self, reference: &ReferenceTrace, ts: f64) -> Result<BenchmarkGap> {
        let ratio = ts / self.dt;
        let per_sample = ratio.round() as usize;
        if per_sample == 0 || (ratio - per_sample as f64).abs() > 1e-9 * ratio {
            return Err(Error::InvalidArgument(format!("T_s = {ts} is not a multiple of the step {}", self.dt)));
        }
        let (model, plant, _) = self.setup()?;
        let params =
            L1Params { desired: self.desired.clone(), c_filter: self.c_filter.clone(), ts, lyapunov_weight: None };
        let mut aug = L1Augmentor::new(&params, 0.0)?;
        let steps = reference.t.len() - 1;
        let mut x = DVector::zeros(model.n());
        let mut z_aug = self.z_cmd;
        let (mut gamma_x, mut gamma_u) = (0.0_f64, 0.0_f64);
        for i in 0..steps {
            let t = i as f64 * self.dt;
            if i % per_sample == 0 {
                z_aug = aug.step(self.z_cmd, (&plant.c_z * &x)[(0, 0)]);
            }
            gamma_x = gamma_x.max((&reference.x_ref[i] - &x).amax());
            gamma_u = gamma_u.max((reference.u_ref[i] - z_aug).abs());
            let u = z_aug;
            x = rk4(|x, t| &plant.a_z * x + &plant.b_z * (u + self.sigma(x, t)), &x, t, self.dt);
            if !x.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite(format!("benchmark state at t = {t}")));
            }
        }
        Ok(BenchmarkGap { ts, gamma_x, gamma_u })
    }
}

pub fn run_sample_time_benchmark(bench: &SampleTimeBenchmark, ts: f64) -> Result<BenchmarkGap> {
    bench.gap(&bench.reference()?, ts)
}

/// One gap per entry of `ts_list`, sharing a single reference trajectory.
pub fn sample_time_sweep(bench: &SampleTimeBenchmark, ts_list: &[f64]) -> Result<Vec<BenchmarkGap>> {
    let reference = bench.reference()?;
    ts_list.iter().map(|&ts| bench.gap(&reference, ts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar() -> (DesiredModel, PlantAbstraction) {
        let model = build_desired_model(&TransferFunction::new(vec![1.0], vec![1.0, 1.0]).unwrap()).unwrap();
        let plant = PlantAbstraction { a_z: model.a_m().clone(), b_z: model.b_m().clone(), c_z: model.c_m().clone() };
        (model, plant)
    }

    #[test]
    fn zero_uncertainty_passes_command_through() {
        let (model, plant) = scalar();
        let c = TransferFunction::new(vec![2.0], vec![1.0, 3.0, 2.0]).unwrap();
        let cmd = |t: f64| if t < 1.0 { 0.0 } else { 2.0 };
        let tr = reference_system_simulate(
            &plant,
            &model,
            &c,
            &DMatrix::zeros(1, 1),
            |_, _| 0.0,
            cmd,
            &DVector::zeros(1),
            10.0,
            0.01,
        )
        .unwrap();
        for (t, u) in tr.t.iter().zip(&tr.u_ref) {
            assert_eq!(*u, cmd(*t));
        }
        // z_ref = 2(1 - e^{-(t-1)}) for t ≥ 1, sampled at the grid
        let last = *tr.z_ref.last().unwrap();
        assert!((last - 2.0 * (1.0 - (-9.0f64).exp())).abs() < 1e-3, "{last}");
    }

    #[test]
    fn constant_uncertainty_recovers_command() {
        let model = build_desired_model(&default_desired_tf()).unwrap();
        let plant = PlantAbstraction { a_z: model.a_m().clone(), b_z: model.b_m().clone(), c_z: model.c_m().clone() };
        // C(s) = 0.1³/(s+0.1)³ so ten model time constants are enough for both
        let c = TransferFunction::new(vec![1e-3], vec![1.0, 0.3, 0.03, 1e-3]).unwrap();
        let tr = reference_system_simulate(
            &plant,
            &model,
            &c,
            &DMatrix::zeros(1, 2),
            |_, _| 0.7,
            |_| 3.0,
            &DVector::zeros(2),
            1000.0,
            0.05,
        )
        .unwrap();
        let last = *tr.z_ref.last().unwrap();
        assert!((last - 3.0).abs() < 0.03, "{last}");
    }

    #[test]
    fn nonzero_initial_state_needs_matching_dimension() {
        let (model, _) = scalar();
        let plant = PlantAbstraction {
            a_z: DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]),
            b_z: DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            c_z: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        };
        let c = TransferFunction::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        let err = reference_system_simulate(
            &plant,
            &model,
            &c,
            &DMatrix::zeros(1, 2),
            |_, _| 0.0,
            |_| 0.0,
            &DVector::from_vec(vec![1.0, 0.0]),
            1.0,
            0.01,
        );
        assert!(err.is_err());
    }

    #[test]
    fn benchmark_gap_shrinks_with_sample_time() {
        let bench = SampleTimeBenchmark { horizon: 100.0, ..Default::default() };
        let gaps = sample_time_sweep(&bench, &[0.4, 0.1]).unwrap();
        assert!(gaps[1].gamma_x < gaps[0].gamma_x, "{gaps:?}");
        assert!(gaps.iter().all(|g| g.gamma_x.is_finite() && g.gamma_u.is_finite()));
        assert!(bench.gap(&bench.reference().unwrap(), 0.015).is_err());
    }
}
