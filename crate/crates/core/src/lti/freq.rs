use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Domain, StateSpaceModel};
use crate::error::{Error, Result};

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// `C (λI - A)^-1 B + D` at an arbitrary complex point `λ`.
pub fn eval_at(sys: &StateSpaceModel, lambda: Complex64) -> Result<DMatrix<Complex64>> {
    let d = to_complex(sys.d());
    let n = sys.n_states();
    if n == 0 {
        return Ok(d);
    }
    let mut resolvent = -to_complex(sys.a());
    for i in 0..n {
        resolvent[(i, i)] += lambda;
    }
    let lu = resolvent.lu();
    let scale = sys.a().amax().max(lambda.norm()).max(f64::MIN_POSITIVE);
    let min_pivot = lu.u().diagonal().iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min);
    if !(min_pivot > 64.0 * f64::EPSILON * scale) {
        return Err(Error::Singular(format!("resolvent is singular at {lambda}")));
    }
    let x =
        lu.solve(&to_complex(sys.b())).ok_or_else(|| Error::Singular(format!("resolvent is singular at {lambda}")))?;
    Ok(to_complex(sys.c()) * x + d)
}

/// Frequency response at `omega` rad/s (`s = jω`, or `z = e^{jωh}` when discrete).
pub fn freq_response(sys: &StateSpaceModel, omega: f64) -> Result<DMatrix<Complex64>> {
    let point = match sys.domain() {
        Domain::Continuous => Complex64::new(0.0, omega),
        Domain::Discrete(h) => Complex64::from_polar(1.0, omega * h),
    };
    eval_at(sys, point)
}
