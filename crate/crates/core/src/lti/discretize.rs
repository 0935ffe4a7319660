use nalgebra::DMatrix;

use super::{Domain, StateSpaceModel};
use crate::error::{Error, Result};

/// Matrix exponential (Padé scaling and squaring).
pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension("matrix exponential of a non-square matrix".into()));
    }
    if a.nrows() == 0 {
        return Ok(a.clone());
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix exponential argument".into()));
    }
    let e = a.exp();
    if e.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow("matrix exponential is not finite".into()));
    }
    Ok(e)
}

/// `(e^{A h}, (∫_0^h e^{A τ} dτ) B)` from the exponential of `[[A, B], [0, 0]] h`.
///
/// Valid for singular `A`.
pub(crate) fn exp_and_integral(a: &DMatrix<f64>, b: &DMatrix<f64>, step: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let m = b.ncols();
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * step));
    aug.view_mut((0, n), (n, m)).copy_from(&(b * step));
    let e = expm(&aug)?;
    Ok((e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, m)).into_owned()))
}

/// Zero-order-hold discretization with sample step `step`.
pub fn zoh_discretize(sys: &StateSpaceModel, step: f64) -> Result<StateSpaceModel> {
    if !sys.is_continuous() {
        return Err(Error::InvalidArgument("zoh_discretize needs a continuous-time system".into()));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("step {step} must be positive")));
    }
    let (ad, bd) = exp_and_integral(sys.a(), sys.b(), step)?;
    StateSpaceModel::new(ad, bd, sys.c().clone(), sys.d().clone(), Domain::Discrete(step)).map_err(|e| match e {
        Error::NonFinite(what) => Error::Overflow(format!("discretized {what}")),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Truncated Taylor series with many terms; converges for modest `‖A h‖`.
    fn series_exp(a: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
        let n = a.nrows();
        let mut sum = DMatrix::identity(n, n);
        let mut term = DMatrix::identity(n, n);
        for k in 1..terms {
            term = &term * a / k as f64;
            sum += &term;
        }
        sum
    }

    fn scalar(a: f64, b: f64) -> StateSpaceModel {
        StateSpaceModel::continuous(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, b),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
        )
        .unwrap()
    }

    #[test]
    fn pure_integrator() {
        let d = zoh_discretize(&scalar(0.0, 1.0), 0.05).unwrap();
        assert_relative_eq!(d.a()[(0, 0)], 1.0);
        assert_relative_eq!(d.b()[(0, 0)], 0.05, epsilon = 1e-15);
        assert_eq!(d.domain(), Domain::Discrete(0.05));
    }

    #[test]
    fn first_order_lag_matches_series() {
        let d = zoh_discretize(&scalar(-1.0, 1.0), 0.05).unwrap();
        // ∫_0^h e^{-τ} dτ = 1 - e^{-h}; both from a 30-term series
        let e = series_exp(&DMatrix::from_element(1, 1, -0.05), 30)[(0, 0)];
        assert_relative_eq!(d.a()[(0, 0)], e, epsilon = 1e-15);
        assert_relative_eq!(d.b()[(0, 0)], 1.0 - e, epsilon = 1e-15);
        assert!((d.a()[(0, 0)] - 0.951229).abs() < 1e-6);
        assert!((d.b()[(0, 0)] - 0.048770).abs() < 1e-6);
    }

    #[test]
    fn double_integrator_is_exact() {
        let h = 0.3;
        let sys = StateSpaceModel::continuous(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let d = zoh_discretize(&sys, h).unwrap();
        assert_relative_eq!(d.a(), &DMatrix::from_row_slice(2, 2, &[1.0, h, 0.0, 1.0]), epsilon = 1e-15);
        assert_relative_eq!(d.b(), &DMatrix::from_row_slice(2, 1, &[h * h / 2.0, h]), epsilon = 1e-15);
    }

    #[test]
    fn expm_agrees_with_series_on_random_matrix() {
        let a = DMatrix::from_row_slice(3, 3, &[-0.3, 0.7, 0.1, -0.2, 0.05, 0.4, 0.9, -0.6, -1.1]);
        assert_relative_eq!(expm(&a).unwrap(), series_exp(&a, 40), epsilon = 1e-13);
    }

    #[test]
    fn discrete_input_is_rejected() {
        let d = zoh_discretize(&scalar(-1.0, 1.0), 0.1).unwrap();
        assert!(zoh_discretize(&d, 0.1).is_err());
        assert!(zoh_discretize(&scalar(-1.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn overflow_is_reported() {
        let err = zoh_discretize(&scalar(1.0, 1.0), 1e4).unwrap_err();
        assert!(matches!(err, Error::Overflow(_)), "{err:?}");
    }
}
