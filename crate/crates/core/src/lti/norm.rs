use nalgebra::DMatrix;

use super::{expm, solve_lyapunov, spectral_abscissa, StateSpaceModel};
use crate::error::{Error, Result};

/// Truncated L1 (peak-to-peak induced) norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Norm {
    /// `max_i Σ_j (|D_ij| + ∫_0^T |h_ij(t)| dt)`.
    pub value: f64,
    /// Upper bound on the neglected `∫_T^∞` part.
    pub tail: f64,
}

impl L1Norm {
    pub fn upper_bound(&self) -> f64 {
        self.value + self.tail
    }
}

fn static_norm(d: &DMatrix<f64>) -> f64 {
    super::linalg::infinity_norm(d)
}

/// L1 norm of a stable continuous system from its sampled impulse response.
///
/// The impulse response is propagated exactly (`x_{k+1} = e^{A dt} x_k`) and
/// `|h|` is integrated with the trapezoid rule over `[0, horizon]`. `horizon`
/// must be at least ten slowest time constants.
pub fn l1_norm(sys: &StateSpaceModel, horizon: f64, dt: f64) -> Result<L1Norm> {
    if !sys.is_continuous() {
        return Err(Error::InvalidArgument("l1_norm needs a continuous-time system".into()));
    }
    let n = sys.n_states();
    if n == 0 {
        return Ok(L1Norm { value: static_norm(sys.d()), tail: 0.0 });
    }
    let abscissa = spectral_abscissa(sys.a());
    if !(abscissa < 0.0) {
        return Err(Error::Unstable { abscissa });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt {dt} must be positive")));
    }
    let tau = 1.0 / -abscissa;
    if !(horizon >= 10.0 * tau) {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} s is shorter than ten slowest time constants ({} s)",
            10.0 * tau
        )));
    }
    let steps = (horizon / dt).ceil() as usize;
    let phi = expm(&(sys.a() * dt))?;
    let (p, m) = (sys.n_outputs(), sys.n_inputs());

    let mut x = sys.b().clone();
    let mut y = sys.c() * &x;
    let mut integral = DMatrix::<f64>::zeros(p, m);
    let mut prev = y.abs();
    let mut next = DMatrix::zeros(n, m);
    for _ in 0..steps {
        next.gemm(1.0, &phi, &x, 0.0);
        std::mem::swap(&mut x, &mut next);
        y.gemm(1.0, sys.c(), &x, 0.0);
        let cur = y.abs();
        integral += (&prev + &cur) * (0.5 * dt);
        prev = cur;
    }

    // Weighted Cauchy-Schwarz with α = |abscissa|/2:
    // ∫_T^∞ |c e^{A(t-T)} x_T| dt ≤ sqrt(x_Tᵀ P_α x_T / (2α)),
    // where (A + αI)ᵀ P_α + P_α (A + αI) + cᵀ c = 0.
    let alpha = -0.5 * abscissa;
    let shifted = sys.a() + DMatrix::identity(n, n) * alpha;
    let mut tail = 0.0_f64;
    let mut value = 0.0_f64;
    for i in 0..p {
        let ci = sys.c().rows(i, 1).into_owned();
        let gram = solve_lyapunov(&shifted, &(ci.transpose() * &ci))?;
        let mut row_tail = 0.0;
        let mut row_value = 0.0;
        for j in 0..m {
            let xt = x.column(j);
            let q = (xt.transpose() * &gram * xt)[(0, 0)].max(0.0);
            row_tail += (q / (2.0 * alpha)).sqrt();
            row_value += integral[(i, j)] + sys.d()[(i, j)].abs();
        }
        tail = tail.max(row_tail);
        value = value.max(row_value);
    }
    Ok(L1Norm { value, tail })
}

/// [`l1_norm`] with the step and horizon chosen from the spectrum:
/// `dt = min(τ_slow/1000, τ_fast/50)` and a horizon of `40 τ_slow`.
pub fn l1_norm_auto(sys: &StateSpaceModel) -> Result<L1Norm> {
    if sys.n_states() == 0 {
        return Ok(L1Norm { value: static_norm(sys.d()), tail: 0.0 });
    }
    let eig = sys.a().complex_eigenvalues();
    let abscissa = eig.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    if !(abscissa < 0.0) {
        return Err(Error::Unstable { abscissa });
    }
    let fastest = eig.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let tau_slow = 1.0 / -abscissa;
    let tau_fast = 1.0 / fastest;
    let dt = (tau_slow / 1000.0).min(tau_fast / 50.0);
    l1_norm(sys, 40.0 * tau_slow, dt)
}
